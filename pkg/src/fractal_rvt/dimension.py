"""Box counting, configuration sets and the dimension experiments.

Grids are anchored at the origin with half-open cells ``[k delta, (k+1) delta)``.
Box counts are counts of cells meeting a fixed set, either the finite cloud
of centers (the default) or the union of open cubes of half-width
``resolution`` about them. Either way the count is monotone and satisfies
``N_delta <= N_{delta/2} <= 2^D N_delta`` on dyadic scales.
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _pairs
from .fractal_sets import IntervalSet, PointSet, build_lattice_E
from .geometry import ConvexBody, estimate_lipschitz, make_phi_body_gauge
from .measures import fit_loglog
from ._validation import MAX_POINTS, check_scalar, check_size, check_vector

__all__ = [
    "BoxCountTable",
    "ConfigSet",
    "box_count",
    "box_count_table",
    "dyadic_scales",
    "minkowski_dim_estimate",
    "stage_dimension",
    "build_config_set",
    "default_tolerance",
    "verify_rvt_bound",
    "sharpness_experiment",
]


@dataclass
class BoxCountTable:
    """Covering counts ``N_delta`` at several scales."""

    deltas: np.ndarray
    counts: np.ndarray
    anchor: np.ndarray
    descriptor: dict = field(default_factory=dict)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "count"])
        for dl, c in zip(self.deltas, self.counts):
            w.writerow([f"{dl:.12e}", int(c)])
        return buf.getvalue()

    def to_json(self):
        return json.dumps({"deltas": [float(x) for x in self.deltas],
                           "counts": [int(c) for c in self.counts],
                           "anchor": [float(a) for a in self.anchor],
                           "set": self.descriptor}, sort_keys=True, indent=2)


class ConfigSet:
    """Ordered pairs ``(i, j)`` of ``base`` with ``|phi_l(x_i, x_j) - t_l| <= tol``.

    Seen as a subset of R^(2d), each pair is the point ``(x_i, x_j)``.
    """

    def __init__(self, base, I, J, values, t, tol, phi_name):
        self.base = base
        self.I = np.asarray(I, dtype=np.int64)
        self.J = np.asarray(J, dtype=np.int64)
        self.values = np.asarray(values, dtype=float)
        self.t = np.asarray(t, dtype=float)
        self.tol = float(tol)
        self.phi_name = phi_name

    def __len__(self):
        return len(self.I)

    def __repr__(self):
        return f"ConfigSet(pairs={len(self)}, t={self.t.tolist()}, tol={self.tol:.3g}, phi={self.phi_name!r})"

    @property
    def dimension(self):
        return 2 * self.base.d

    @property
    def resolution(self):
        return self.base.resolution

    def pairs(self):
        return np.stack([self.I, self.J], axis=1)

    def as_point_set(self):
        """The pairs as a cloud in R^(2d), with the base resolution."""
        X = self.base.points
        P = np.concatenate([X[self.I], X[self.J]], axis=1) if len(self) else np.empty((0, self.dimension))
        if self.base.is_exact:
            N = self.base.numerators
            num = np.concatenate([N[self.I], N[self.J]], axis=1)
            dens = tuple(self.base.denominators) * 2
            return PointSet(None if len(self) else P, self.resolution, f"config({self.base.label})",
                            {"t": self.t.tolist(), "tol": self.tol}, numerators=num, denominators=dens)
        return PointSet(P, self.resolution, f"config({self.base.label})",
                        {"t": self.t.tolist(), "tol": self.tol})

    def recheck(self, phi):
        """Re-evaluate phi on every stored pair; True iff all satisfy the constraint."""
        if not len(self):
            return True
        cloud = _pairs.Cloud(self.base)
        V = cloud.values(phi, self.I, self.J)
        return bool(np.all(np.abs(V - self.t) <= self.tol))


# ---------------------------------------------------------------------------
# Box counting
# ---------------------------------------------------------------------------

def _as_cloud(P):
    if isinstance(P, ConfigSet):
        P = P.as_point_set()
    if not isinstance(P, PointSet):
        raise TypeError("expected a PointSet or ConfigSet")
    return P


def _unique_rows(K):
    if len(K) == 0:
        return 0
    K = np.ascontiguousarray(K)
    v = K.view(np.dtype((np.void, K.dtype.itemsize * K.shape[1]))).ravel()
    return len(np.unique(v))


def _cell_index(P, delta):
    if P.is_exact:
        # exact floor(num / (den * delta)) whenever 1/delta is an integer
        inv = 1.0 / delta
        if abs(inv - round(inv)) < 1e-12 * inv:
            k = int(round(inv))
            den = np.asarray(P.denominators, dtype=np.int64)
            return np.floor_divide(P.numerators * k, den)
    return np.floor(P.points / delta).astype(np.int64)


def box_count(P, delta, neighborhood=False):
    """Number of origin-anchored ``delta``-cells meeting the set.

    Parameters
    ----------
    P : PointSet or ConfigSet
    delta : float
    neighborhood : bool
        If False, count cells containing a center. If True, count cells
        meeting the open cube of half-width ``resolution`` about some center
        (for interval sets, the open intervals themselves).

    Returns
    -------
    int
    """
    P = _as_cloud(P)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if len(P) == 0:
        return 0
    if not neighborhood or P.resolution == 0:
        return _unique_rows(_cell_index(P, delta))
    if isinstance(P, IntervalSet):
        a, b = P.lefts[:, None], P.rights[:, None]
    else:
        a, b = P.points - P.resolution, P.points + P.resolution
    # cells k with k delta < b and (k + 1) delta > a
    lo = np.floor(a / delta).astype(np.int64)
    hi = np.ceil(b / delta).astype(np.int64) - 1
    D = lo.shape[1]
    width = int((hi - lo).max()) + 1
    check_size(len(lo) * width ** D, MAX_POINTS * 8, "cell visits")
    keys = []
    for o in np.indices((width,) * D).reshape(D, -1).T:
        K = lo + o
        keys.append(K[np.all(K <= hi, axis=1)])
    return _unique_rows(np.concatenate(keys))


def dyadic_scales(delta_min, delta_max):
    """Dyadic ``2**-k`` between the two bounds (inclusive), decreasing."""
    kmin = int(math.ceil(-math.log2(delta_max) - 1e-12))
    kmax = int(math.floor(-math.log2(delta_min) + 1e-12))
    return np.array([2.0 ** -k for k in range(kmin, kmax + 1)])


def box_count_table(P, delta_list, neighborhood=False):
    P = _as_cloud(P)
    deltas = np.sort(np.asarray(delta_list, dtype=float))[::-1]
    counts = np.array([box_count(P, dl, neighborhood) for dl in deltas], dtype=np.int64)
    return BoxCountTable(deltas, counts, np.zeros(P.d), P.descriptor())


def minkowski_dim_estimate(P, delta_list, min_samples=4, neighborhood=False):
    """Slope of ``log N_delta`` against ``log(1/delta)``.

    The returned report has ``scales = 1/delta`` and ``values = N_delta``, so
    its ``exponent`` is the dimension estimate.
    """
    table = box_count_table(P, delta_list, neighborhood)
    if len(table.deltas) < min_samples:
        raise ValueError(f"need at least {min_samples} scales")
    return fit_loglog(1.0 / table.deltas, table.counts, label="box_count",
                      meta={"counts": table.counts.tolist()}, min_samples=min_samples)


def stage_dimension(P, delta=None):
    """Single-scale proxy ``log N_delta / log(1/delta)`` (default ``delta`` = resolution)."""
    P = _as_cloud(P)
    delta = P.resolution if delta is None else float(delta)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    n = box_count(P, delta)
    return math.log(n) / math.log(1.0 / delta) if n > 0 else 0.0


# ---------------------------------------------------------------------------
# Configuration sets
# ---------------------------------------------------------------------------

def default_tolerance(E, phi):
    """``Lipschitz(phi) * 2 delta``: every pair of the neighborhood set is within it."""
    return estimate_lipschitz(phi, E.points) * 2.0 * E.resolution


def build_config_set(E, phi, t, tol=None, method="auto", n_jobs=None):
    """Pairs of ``E`` within ``tol`` of the level ``t`` of ``phi``.

    Parameters
    ----------
    E : PointSet
    phi : PhiFamily
    t : float or array-like of shape (m,)
    tol : float, optional
        Defaults to :func:`default_tolerance`.

    Returns
    -------
    ConfigSet
    """
    t = check_vector(np.broadcast_to(np.asarray(t, dtype=float), (phi.m,)), phi.m, "t")
    tol = default_tolerance(E, phi) if tol is None else float(tol)
    pad = _pairs._PAD * (1.0 + np.abs(t) + tol)
    I, J, V = _pairs.collect_pairs(E, phi, t - tol - pad, t + tol + pad, method, n_jobs)
    keep = np.all(np.abs(V - t) <= tol, axis=1)
    return ConfigSet(E, I[keep], J[keep], V[keep], t, tol, phi.name)


def verify_rvt_bound(E, phi, t, delta_list=None, s=None, tol=None, slack=0.2,
                     method="stage", n_jobs=None):
    """Compare the box dimension of ``S_t(E)`` with ``2 s - m``.

    Parameters
    ----------
    E : PointSet
        A construction carrying its dimension ``s`` in ``E.params`` unless
        ``s`` is given.
    method : {'stage', 'slope'}
        ``'stage'`` uses ``log N_delta / log(1/delta)`` at the resolution of
        ``E``; ``'slope'`` fits over ``delta_list`` (default: dyadic scales
        between the resolution and its square root).

    Returns
    -------
    dict
    """
    s = float(E.params["s"] if s is None else s)
    S = build_config_set(E, phi, t, tol, n_jobs=n_jobs)
    reference = 2.0 * s - phi.m
    out = {"s": s, "m": phi.m, "d": E.d, "phi": phi.name, "t": np.atleast_1d(t).tolist(),
           "tol": S.tol, "pairs": len(S), "reference": reference, "slack": slack,
           "method": method, "resolution": E.resolution,
           "hypothesis_s_gt_(d+1)/2": bool(s > (E.d + 1) / 2)}
    if len(S) == 0:
        out.update(estimate=0.0, passed=True)
        return out
    if method == "stage":
        n = box_count(S, E.resolution)
        out["box_count"] = int(n)
        out["estimate"] = math.log(n) / math.log(1.0 / E.resolution)
    elif method == "slope":
        if delta_list is None:
            delta_list = dyadic_scales(E.resolution, math.sqrt(E.resolution))
        rep = minkowski_dim_estimate(S, delta_list)
        out["estimate"] = rep.exponent
        out["fit_residual"] = rep.residual
        out["deltas"] = [float(1.0 / x) for x in rep.scales]
        out["counts"] = rep.meta["counts"]
    else:
        raise ValueError(f"unknown method {method!r}")
    out["passed"] = bool(out["estimate"] <= reference + slack)
    return out


def sharpness_experiment(q_list, s=1.2, d=2, h=0.1, aligned=True, tol=None, c_ratio_max=4.0,
                         margin=0.1, n_jobs=None):
    """Count ``delta``-boxes covering ``S_1(E_q)`` for the body gauge, ``delta = q^(-d/s)``.

    For each ``q`` the observed count is compared with ``q^(2 d^2/(d+1))``;
    the implied dimension is the slope of ``log N`` against ``log(1/delta)``
    across ``q``. The check passes when ``N / q^(2d^2/(d+1))`` varies by at
    most ``c_ratio_max`` and the implied dimension exceeds ``2 s - 1`` by
    ``margin``.

    ``tol`` defaults to a rounding-level tolerance (``1e-9``), so only
    pairs on the unit sphere of the gauge are kept.
    """
    check_scalar(s, "s", min_val=0, include_min=False)
    q_list = sorted(int(q) for q in q_list)
    if len(q_list) < 2:
        raise ValueError("need at least two values of q")
    body = ConvexBody(d, h)
    phi = make_phi_body_gauge(body)
    tol = 1e-9 if tol is None else float(tol)
    power = 2.0 * d * d / (d + 1)
    rows = []
    for q in q_list:
        E = build_lattice_E(q, s, d, aligned=aligned)
        S = build_config_set(E, phi, 1.0, tol, n_jobs=n_jobs)
        delta = E.resolution
        n = box_count(S, delta)
        rows.append({"q": q, "points": len(E), "delta": delta, "pairs": len(S), "box_count": int(n),
                     "c": n / q ** power,
                     "stage_proxy": math.log(n) / math.log(1.0 / delta) if n else 0.0})
    c = np.array([r["c"] for r in rows])
    logn = np.log([max(r["box_count"], 1) for r in rows])
    loginv = np.log([1.0 / r["delta"] for r in rows])
    slope = float(np.polyfit(loginv, logn, 1)[0])
    claimed = 2.0 * d * s / (d + 1)
    bound = 2.0 * s - 1.0
    c_ratio = float(c.max() / c.min()) if c.min() > 0 else math.inf
    return {
        "d": d, "s": s, "h": h, "aligned": aligned, "tol": tol, "rows": rows,
        "count_exponent": power, "c_ratio": c_ratio, "c_ratio_max": c_ratio_max,
        "dimension_proxy": slope, "claimed_lower_bound": claimed, "rvt_bound": bound,
        "margin": margin,
        "passed": bool(c_ratio <= c_ratio_max and slope >= bound + margin),
    }
