"""Exact point / translated-paraboloid incidence counts.

A point ``q`` lies on ``H + p`` iff ``q_d - p_d = sum_{j<d} (q_j - p_j)**2``.
After clearing denominators this is an integer equation, so every count
here is exact.
"""
import math

import numpy as np

from .fractal_sets import ParaboloidFamily, PointSet, build_paraboloid_family, build_valtr
from .measures import fit_loglog
from ._validation import MAX_PAIRS, check_size

__all__ = ["IncidenceResult", "count_incidences", "incidence_scaling"]


class IncidenceResult(int):
    """Total incidence count (an ``int``) with per-translate detail.

    Attributes
    ----------
    per_translate : ndarray
        Incidences of each translate ``H + p``.
    interior : ndarray of bool
        Translates whose cap over every column of ``P`` stays inside the
        vertical extent of ``P``.
    """

    def __new__(cls, total, per_translate, interior):
        obj = super().__new__(cls, int(total))
        obj.per_translate = per_translate
        obj.interior = interior
        return obj


def _common_integers(P, T):
    """Both sets over per-axis common denominators, plus the clearing weights."""
    if not (P.is_exact and T.is_exact):
        raise ValueError("incidence counting needs rational-backed point sets")
    dens = [math.lcm(a, b) for a, b in zip(P.denominators, T.denominators)]
    sp = np.array([D // a for D, a in zip(dens, P.denominators)], dtype=np.int64)
    st = np.array([D // b for D, b in zip(dens, T.denominators)], dtype=np.int64)
    Q = P.numerators * sp
    R = T.numerators * st
    lam = math.lcm(dens[-1], *(D * D for D in dens[:-1]))
    cd = lam // dens[-1]
    cj = np.array([lam // (D * D) for D in dens[:-1]], dtype=np.int64)
    bound = int(np.abs(Q).max() + np.abs(R).max()) ** 2 * int(cj.max()) * Q.shape[1]
    if bound >= 2 ** 62:
        raise OverflowError("coordinates too large for exact int64 incidence arithmetic")
    return Q, R, cd, cj


def _brute(Q, R, cd, cj):
    check_size(len(Q) * len(R), MAX_PAIRS, "point/surface pairs")
    per = np.zeros(len(R), dtype=np.int64)
    rows = max(1, (1 << 22) // max(len(Q), 1))
    for s in range(0, len(R), rows):
        r = R[s:s + rows, None, :]
        lhs = cd * (Q[None, :, -1] - r[:, :, -1])
        rhs = ((Q[None, :, :-1] - r[:, :, :-1]) ** 2 * cj).sum(axis=2)
        per[s:s + rows] = (lhs == rhs).sum(axis=1)
    return per


def _columns(Q):
    cols, inv = np.unique(Q[:, :-1], axis=0, return_inverse=True)
    return cols, inv.reshape(-1)


def _fast(Q, R, cd, cj):
    cols, inv = _columns(Q)
    last = Q[:, -1]
    lo, hi = int(last.min()), int(last.max())
    W = hi - lo + 1
    keys = np.sort(inv.astype(np.int64) * W + (last - lo))
    per = np.zeros(len(R), dtype=np.int64)
    rows = max(1, (1 << 22) // max(len(cols), 1))
    cid = np.arange(len(cols), dtype=np.int64)
    for s in range(0, len(R), rows):
        r = R[s:s + rows]
        S = ((cols[None, :, :] - r[:, None, :-1]) ** 2 * cj).sum(axis=2)
        ok = S % cd == 0
        target = r[:, -1, None] + S // cd
        ok &= (target >= lo) & (target <= hi)
        k = cid[None, :] * W + (target - lo)
        pos = np.searchsorted(keys, k)
        pos = np.minimum(pos, len(keys) - 1)
        per[s:s + rows] = (ok & (keys[pos] == k)).sum(axis=1)
    return per


def _interior(Q, R, cd, cj):
    cols, _ = _columns(Q)
    last = Q[:, -1]
    lo, hi = last.min(), last.max()
    inside = np.ones(len(R), dtype=bool)
    rows = max(1, (1 << 22) // max(len(cols), 1))
    for s in range(0, len(R), rows):
        r = R[s:s + rows]
        S = ((cols[None, :, :] - r[:, None, :-1]) ** 2 * cj).sum(axis=2)
        inside[s:s + rows] = (cd * (lo - r[:, -1]) <= S.min(axis=1)) & (S.max(axis=1) <= cd * (hi - r[:, -1]))
    return inside


def count_incidences(P, L, method="auto"):
    """Exact number of pairs ``(q, H + p)`` with ``q`` in ``P`` on ``H + p``.

    Parameters
    ----------
    P : PointSet
        Rational-backed points.
    L : ParaboloidFamily
    method : {'auto', 'fast', 'brute'}
        ``'fast'`` scans, for each translate, one candidate per column of
        ``P`` (distinct first ``d - 1`` coordinates); ``'brute'`` tests all
        pairs.

    Returns
    -------
    IncidenceResult
    """
    if not isinstance(P, PointSet) or not isinstance(L, ParaboloidFamily):
        raise TypeError("expected a PointSet and a ParaboloidFamily")
    if P.d != L.d:
        raise ValueError("dimension mismatch")
    Q, R, cd, cj = _common_integers(P, L.translations)
    if method == "auto":
        method = "fast"
    if method == "fast":
        per = _fast(Q, R, cd, cj)
    elif method == "brute":
        per = _brute(Q, R, cd, cj)
    else:
        raise ValueError(f"unknown method {method!r}")
    return IncidenceResult(per.sum(), per, _interior(Q, R, cd, cj))


def incidence_scaling(n_list, d=2, method="auto"):
    """Incidences of ``P_n`` with its own paraboloid family over ``n_list``.

    The report fits ``log I`` against ``log N`` with ``N = n**(d+1)``; its
    ``meta['rows']`` holds per-``n`` counts and the mean incidence of
    interior translates next to ``n**(d-1)``.
    """
    n_list = sorted(int(n) for n in n_list)
    if len(n_list) < 3:
        raise ValueError("need at least three values of n")
    rows = []
    for n in n_list:
        P = build_valtr(n, d)
        res = count_incidences(P, build_paraboloid_family(P), method)
        inner = res.per_translate[res.interior]
        rows.append({
            "n": n, "N": len(P), "incidences": int(res),
            "interior_translates": int(res.interior.sum()),
            "interior_mean": float(inner.mean()) if len(inner) else 0.0,
            "interior_min": int(inner.min()) if len(inner) else 0,
            "interior_max": int(inner.max()) if len(inner) else 0,
            "expected_per_translate": n ** (d - 1),
        })
    N = [r["N"] for r in rows]
    I = [r["incidences"] for r in rows]
    for k, r in enumerate(rows):
        r["slope_so_far"] = (float(np.polyfit(np.log(N[:k + 1]), np.log(I[:k + 1]), 1)[0])
                             if k > 0 else float("nan"))
    return fit_loglog(N, I, label="incidences", min_samples=3,
                      meta={"d": d, "rows": rows, "expected_exponent": 2.0 - 2.0 / (d + 1)})
