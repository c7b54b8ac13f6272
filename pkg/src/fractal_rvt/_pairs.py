"""Exact enumeration of ordered point pairs whose phi-values hit a window.

Three interchangeable routes produce the same pair set:

``brute``
    every ordered pair, in row blocks;
``cells``
    points are bucketed into a uniform grid and whole cell pairs are
    discarded when interval bounds on phi prove no member pair can land in
    the window; surviving cell pairs are evaluated pair by pair;
``lattice``
    for full box lattices and translation-invariant phi, the pair multiset
    is summarized by difference vectors with multiplicities.

All routes evaluate phi on differences formed the same way (integer
numerator differences for exact sets), so their pair classifications agree
bit for bit.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._validation import MAX_PAIRS, check_size, n_threads

_BLOCK = 1 << 21
_PAD = 1e-9


class Cloud:
    """Float coordinates plus the exact numerators when available."""

    def __init__(self, P):
        self.X = np.asarray(P.points, dtype=float)
        self.N = getattr(P, "numerators", None)
        self.den = None if self.N is None else np.asarray(P.denominators, dtype=float)
        self.n, self.d = self.X.shape

    def diff(self, I, J):
        if self.N is not None:
            return (self.N[I] - self.N[J]) / self.den
        return self.X[I] - self.X[J]

    def values(self, phi, I, J):
        if phi.kernel is not None:
            return np.asarray(phi.kernel(self.diff(I, J)), dtype=float).reshape(len(I), phi.m)
        return phi.values(self.X[I], self.X[J])


def lattice_shape(P):
    """``(sizes, steps)`` if ``P`` is a full exact box lattice, otherwise None."""
    N = getattr(P, "numerators", None)
    if N is None or len(N) == 0:
        return None
    sizes, steps = [], []
    for k in range(N.shape[1]):
        u = np.unique(N[:, k])
        g = int(np.gcd.reduce(np.diff(u))) if len(u) > 1 else 1
        if (u[-1] - u[0]) // g + 1 != len(u):
            return None
        sizes.append(len(u))
        steps.append(g)
    if int(np.prod(np.array(sizes, dtype=object))) != len(N):
        return None
    if len(np.unique(N, axis=0)) != len(N):
        return None
    return np.array(sizes, dtype=np.int64), np.array(steps, dtype=np.int64)


def lattice_differences(shape):
    """Difference numerators ``D`` and their ordered-pair multiplicities."""
    sizes, steps = shape
    axes = [np.arange(-(s - 1), s, dtype=np.int64) for s in sizes]
    check_size(int(np.prod([len(a) for a in axes])), MAX_PAIRS, "difference vectors")
    grids = np.meshgrid(*axes, indexing="ij")
    A = np.stack([g.ravel() for g in grids], axis=1)
    mult = np.ones(len(A), dtype=np.int64)
    for k, s in enumerate(sizes):
        mult *= s - np.abs(A[:, k])
    return A * steps, mult


def _in_window(V, lo, hi):
    return np.all((V >= lo) & (V <= hi), axis=1)


def _brute_tasks(cloud, phi, lo, hi):
    n = cloud.n
    rows = max(1, _BLOCK // max(n, 1))
    allj = np.arange(n)

    def task(start):
        I = np.repeat(np.arange(start, min(start + rows, n)), n)
        J = np.tile(allj, min(rows, n - start))
        V = cloud.values(phi, I, J)
        keep = _in_window(V, lo, hi)
        return I[keep], J[keep], V[keep]

    return [lambda s=s: task(s) for s in range(0, n, rows)]


def _cell_tasks(cloud, phi, lo, hi, target_per_cell=32):
    X = cloud.X
    n, d = X.shape
    bmin, bmax = X.min(axis=0), X.max(axis=0)
    span = bmax - bmin
    n_cells = min(max(1, n // target_per_cell), 2048)
    # split axes in proportion to their extent
    flat = span <= 1e-12 * (1.0 + np.max(np.abs(X)))
    k = np.ones(d, dtype=np.int64)
    if not np.all(flat):
        live = span[~flat]
        gm = np.exp(np.mean(np.log(live)))
        k[~flat] = np.clip(np.floor(live / gm * n_cells ** (1.0 / len(live))), 1, n_cells)
    span = np.where(flat, 1.0, span)
    idx = np.minimum(((X - bmin) / span * k).astype(np.int64), k - 1)
    lin = np.ravel_multi_index(idx.T, k)
    order = np.argsort(lin, kind="stable")
    cells, start, count = np.unique(lin[order], return_index=True, return_counts=True)
    C = len(cells)
    cmin = np.minimum.reduceat(X[order], start, axis=0)
    cmax = np.maximum.reduceat(X[order], start, axis=0)
    scale = 1.0 + np.max(np.abs(X))
    pad = _PAD * scale
    vpad = _PAD * (1.0 + np.abs(lo) + np.abs(hi))

    A, B = np.meshgrid(np.arange(C), np.arange(C), indexing="ij")
    A, B = A.ravel(), B.ravel()
    keep = np.ones(len(A), dtype=bool)
    step = 1 << 18
    for s in range(0, len(A), step):
        a, b = A[s:s + step], B[s:s + step]
        if phi.kernel_bounds is not None:
            vlo, vhi = phi.kernel_bounds(cmin[a] - cmax[b] - pad, cmax[a] - cmin[b] + pad)
        elif phi.pair_bounds is not None:
            vlo, vhi = phi.pair_bounds(cmin[a] - pad, cmax[a] + pad, cmin[b] - pad, cmax[b] + pad)
        else:
            continue
        keep[s:s + step] = np.all((vhi >= lo - vpad) & (vlo <= hi + vpad), axis=1)
    A, B = A[keep], B[keep]
    sizes = count[A] * count[B]
    check_size(int(sizes.sum()), MAX_PAIRS, "candidate pairs")

    # group cell pairs into batches of roughly _BLOCK candidate pairs
    cuts = np.searchsorted(np.cumsum(sizes), np.arange(_BLOCK, sizes.sum() + _BLOCK, _BLOCK), side="right")
    bounds = np.unique(np.concatenate([[0], np.minimum(cuts, len(A)), [len(A)]]))

    def task(s, e):
        a, b, sz = A[s:e], B[s:e], sizes[s:e]
        pid = np.repeat(np.arange(len(a)), sz)
        off = np.concatenate([[0], np.cumsum(sz)[:-1]])
        local = np.arange(int(sz.sum())) - off[pid]
        nb = count[b][pid]
        I = order[start[a][pid] + local // nb]
        J = order[start[b][pid] + local % nb]
        V = cloud.values(phi, I, J)
        ok = _in_window(V, lo, hi)
        return I[ok], J[ok], V[ok]

    return [lambda s=s, e=e: task(s, e) for s, e in zip(bounds[:-1], bounds[1:]) if e > s]


def pair_tasks(P, phi, lo, hi, method="auto"):
    """Work items returning ``(I, J, V)`` for pairs with ``lo <= phi <= hi``.

    ``lo`` and ``hi`` are length-``m`` arrays. The task list is deterministic,
    so reducing results in list order gives thread-count-independent output.
    """
    cloud = Cloud(P)
    lo = np.asarray(lo, dtype=float).reshape(phi.m)
    hi = np.asarray(hi, dtype=float).reshape(phi.m)
    if method == "auto":
        prunable = phi.kernel_bounds is not None or phi.pair_bounds is not None
        method = "cells" if prunable and cloud.n > 256 else "brute"
    if method == "brute":
        check_size(cloud.n * cloud.n, MAX_PAIRS, "pairs")
        return _brute_tasks(cloud, phi, lo, hi)
    if method == "cells":
        return _cell_tasks(cloud, phi, lo, hi)
    raise ValueError(f"unknown pair method {method!r}")


def run_tasks(tasks, reduce_fn, n_jobs=None):
    """Apply ``reduce_fn`` to each task's output; results come back in task order."""
    n_jobs = n_threads() if n_jobs is None else max(1, int(n_jobs))
    if n_jobs == 1 or len(tasks) <= 1:
        return [reduce_fn(*t()) for t in tasks]
    with ThreadPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(lambda t: reduce_fn(*t()), tasks))


def collect_pairs(P, phi, lo, hi, method="auto", n_jobs=None):
    """All qualifying ordered pairs, sorted lexicographically by ``(I, J)``."""
    parts = run_tasks(pair_tasks(P, phi, lo, hi, method), lambda I, J, V: (I, J, V), n_jobs)
    if not parts:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty((0, phi.m))
    I = np.concatenate([p[0] for p in parts])
    J = np.concatenate([p[1] for p in parts])
    V = np.concatenate([p[2] for p in parts])
    o = np.lexsort((J, I))
    return I[o], J[o], V[o]
