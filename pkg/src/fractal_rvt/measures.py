"""Empirical measures, the eps-strip mass of a phi-level set, and log-log fits.

The strip mass of a probability measure ``mu`` is

    mu x mu {(x, y) : t_l <= phi_l(x, y) and phi_l(x, y) - t_l <= eps for all l},

summed over ordered pairs including the diagonal. Pair membership is
decided with exactly that pair of comparisons on every code path, so
brute force, cell pruning, lattice differences and polar counting agree.
"""
import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _pairs
from ._validation import MAX_POINTS, check_scalar, check_size, check_vector
from .exceptions import DegenerateFitError, DomainError, SaturationWarning

__all__ = [
    "EmpiricalMeasure",
    "PolarProductMeasure",
    "ScalingReport",
    "fit_loglog",
    "uniform_measure",
    "ball_mass",
    "ball_mass_profile",
    "local_mass_exponents",
    "strip_mass",
    "fit_strip_exponent",
    "GridFunction",
    "sample_function",
    "radon_apply",
]


class EmpiricalMeasure:
    """Probability weights aligned index-wise with the points of ``base``.

    Parameters
    ----------
    base : PointSet
    weights : array-like of shape (n,)
        Nonnegative, summing to 1 within 1e-12.
    """

    def __init__(self, base, weights):
        w = np.asarray(weights, dtype=float).reshape(-1)
        if len(w) != len(base):
            raise ValueError(f"{len(w)} weights for {len(base)} points")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        total = math.fsum(w)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total!r}, not 1")
        w.setflags(write=False)
        self.base = base
        self._weights = w

    @property
    def weights(self):
        return self._weights

    @property
    def points(self):
        return self.base.points

    @property
    def resolution(self):
        return self.base.resolution

    def __len__(self):
        return len(self.base)

    def __repr__(self):
        return f"{type(self).__name__}(base={self.base!r})"

    def mass(self, index):
        """Mass of a subset given by an index array or boolean mask."""
        return math.fsum(self.weights[np.asarray(index)])

    def is_uniform(self):
        w = self.weights
        return bool(np.all(w == w[0]))


class PolarProductMeasure(EmpiricalMeasure):
    """Radial weights times the uniform measure on ``n_angles`` angles.

    Point ``a * n_angles + j`` has weight ``radial_weights[a] / n_angles``.
    """

    def __init__(self, base, radial_weights):
        w = np.asarray(radial_weights, dtype=float).reshape(-1)
        if len(w) != len(base.radii):
            raise ValueError("one radial weight per radius is required")
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError("radial weights must be a probability vector")
        w.setflags(write=False)
        self.base = base
        self.radial_weights = w
        self._weights = None

    @property
    def n_angles(self):
        return self.base.n_angles

    @property
    def weights(self):
        if self._weights is None:
            check_size(len(self.base), MAX_POINTS, "points")
            w = np.repeat(self.radial_weights / self.n_angles, self.n_angles)
            w.setflags(write=False)
            self._weights = w
        return self._weights

    def is_uniform(self):
        return bool(np.all(self.radial_weights == self.radial_weights[0]))

    def sector_mass(self, j0, j1):
        """Mass of the angular sector ``j0 <= j < j1`` (all radii)."""
        return (j1 - j0) / self.n_angles


def uniform_measure(P):
    """Equal weights ``1/|P|``."""
    if len(P) == 0:
        raise ValueError("cannot put a probability measure on an empty set")
    return EmpiricalMeasure(P, np.full(len(P), 1.0 / len(P)))


# ---------------------------------------------------------------------------
# Scaling reports
# ---------------------------------------------------------------------------

@dataclass
class ScalingReport:
    """Samples ``(scale, value)`` with a fitted log-log exponent.

    Attributes
    ----------
    scales, values : ndarray
        Sorted by increasing scale.
    exponent, intercept : float
        Least-squares fit ``log value = exponent * log scale + intercept``.
    residual : float
        Root-mean-square residual of the fit in natural-log units.
    scale_range : tuple of float
        Smallest and largest scale used in the fit.
    """

    scales: np.ndarray
    values: np.ndarray
    exponent: float
    intercept: float
    residual: float
    scale_range: tuple
    label: str = ""
    meta: dict = field(default_factory=dict)

    def to_csv(self, scale_name="scale", value_name="value"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([scale_name, value_name])
        for s, v in zip(self.scales, self.values):
            w.writerow([f"{s:.12e}", f"{v:.12e}"])
        return buf.getvalue()

    def summary(self):
        return {
            "label": self.label,
            "exponent": float(self.exponent),
            "intercept": float(self.intercept),
            "residual": float(self.residual),
            "scale_range": [float(self.scale_range[0]), float(self.scale_range[1])],
            "n_samples": int(len(self.scales)),
            **self.meta,
        }

    def to_json(self):
        return json.dumps(self.summary(), sort_keys=True, indent=2)


def fit_loglog(scales, values, label="", meta=None, min_samples=4):
    """Unweighted least-squares slope of ``log(values)`` against ``log(scales)``.

    Nonpositive values are dropped before fitting.
    """
    s = np.asarray(scales, dtype=float).reshape(-1)
    v = np.asarray(values, dtype=float).reshape(-1)
    order = np.argsort(s, kind="stable")
    s, v = s[order], v[order]
    ok = (s > 0) & (v > 0) & np.isfinite(v)
    if ok.sum() < min_samples or len(np.unique(s[ok])) < 2:
        raise DegenerateFitError(f"need at least {min_samples} positive samples, got {int(ok.sum())}")
    x, y = np.log(s[ok]), np.log(v[ok])
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((y - A @ [slope, icpt]) ** 2)))
    return ScalingReport(s, v, float(slope), float(icpt), res,
                         (float(s[ok][0]), float(s[ok][-1])), label, dict(meta or {}))


# ---------------------------------------------------------------------------
# Ball masses
# ---------------------------------------------------------------------------

def ball_mass(mu, x, delta):
    """``mu`` of the closed Euclidean ball of radius ``delta`` about ``x``."""
    x = check_vector(x, mu.base.d, "x")
    r = np.linalg.norm(mu.points - x, axis=1)
    return mu.mass(r <= delta)


def ball_mass_profile(mu, x, delta_list):
    """Ball masses ``mu(B_delta(x))`` over ``delta_list`` and their local exponent."""
    x = check_vector(x, mu.base.d, "x")
    deltas = np.sort(np.asarray(delta_list, dtype=float))
    if np.any(deltas <= 0):
        raise ValueError("radii must be positive")
    r = np.sort(np.linalg.norm(mu.points - x, axis=1))
    w = mu.weights[np.argsort(np.linalg.norm(mu.points - x, axis=1), kind="stable")]
    cum = np.cumsum(w)
    k = np.searchsorted(r, deltas, side="right")
    masses = np.where(k > 0, cum[np.maximum(k - 1, 0)], 0.0)
    masses = np.minimum(masses, 1.0)
    return fit_loglog(deltas, masses, label="ball_mass", meta={"basepoint": x.tolist()})


def local_mass_exponents(mu, delta_list, n_basepoints=20, seed=0):
    """Local ball-mass exponents at ``n_basepoints`` support points drawn by ``mu``.

    Returns ``(basepoint_indices, exponents)``.
    """
    check_scalar(n_basepoints, "n_basepoints", min_val=1, integer=True)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(mu), size=min(n_basepoints, len(mu)), replace=False, p=mu.weights))
    exps = np.array([ball_mass_profile(mu, mu.points[i], delta_list).exponent for i in idx])
    return idx, exps


# ---------------------------------------------------------------------------
# Strip mass
# ---------------------------------------------------------------------------

def _bins(V, t, eps):
    """Index of the first ``eps`` admitting each pair (``len(eps)`` = none)."""
    D = V - t
    key = D.max(axis=1)
    b = np.searchsorted(eps, key, side="left")
    b[D.min(axis=1) < 0] = len(eps)
    return b


def _strip_pairs(mu, phi, t, eps, method, n_jobs):
    w = mu.weights
    vals, ci = np.unique(w, return_inverse=True)
    C, nb = len(vals), len(eps)
    lo = t - _pairs._PAD * (1.0 + np.abs(t))
    hi = t + eps[-1] + _pairs._PAD * (1.0 + np.abs(t) + eps[-1])
    tasks = _pairs.pair_tasks(mu.base, phi, lo, hi, method)
    exact = C * C * (nb + 1) <= 1 << 22

    if exact:
        def red(I, J, V):
            key = (ci[I] * C + ci[J]) * (nb + 1) + _bins(V, t, eps)
            return np.bincount(key, minlength=C * C * (nb + 1)).astype(np.int64)
    else:
        # correctly rounded per-bin sums are independent of enumeration order
        def red(I, J, V):
            b = _bins(V, t, eps)
            keep = b < nb
            b, p = b[keep], (w[I] * w[J])[keep]
            order = np.argsort(b, kind="stable")
            return np.bincount(b, minlength=nb), p[order]

    parts = _pairs.run_tasks(tasks, red, n_jobs)
    if exact:
        counts = np.zeros(C * C * (nb + 1), dtype=np.int64)
        for p in parts:
            counts += p
        cum = np.cumsum(counts.reshape(C * C, nb + 1)[:, :nb], axis=1)
        wij = np.outer(vals, vals).ravel()
        return np.array([math.fsum(cum[:, e] * wij) for e in range(nb)])
    per_bin = [[] for _ in range(nb)]
    for cnt, prods in parts:
        for e, chunk in enumerate(np.split(prods, np.cumsum(cnt)[:-1])):
            per_bin[e].append(chunk)
    acc = [math.fsum(np.concatenate(c)) if c else 0.0 for c in per_bin]
    return np.minimum([math.fsum(acc[:e + 1]) for e in range(nb)], 1.0)


def _strip_lattice(mu, phi, t, eps, sizes):
    D, mult = _pairs.lattice_differences(sizes)
    V = np.asarray(phi.kernel(D / np.asarray(mu.base.denominators, dtype=float)), dtype=float)
    V = V.reshape(len(D), phi.m)
    counts = np.bincount(_bins(V, t, eps), weights=mult.astype(float), minlength=len(eps) + 1)
    cum = np.cumsum(counts[:len(eps)])
    w = mu.weights[0]
    return cum * (w * w)


def angular_count(clo, chi, n):
    """Number of residues ``k mod n`` with ``clo <= cos(2 pi k / n) <= chi``."""
    clo = np.asarray(clo, dtype=float)
    chi = np.asarray(chi, dtype=float)
    A = np.arccos(np.clip(clo, -1.0, 1.0))
    B = np.arccos(np.clip(chi, -1.0, 1.0))
    half = n // 2
    klo = np.maximum(np.ceil(n * B / (2 * np.pi)), 0).astype(np.int64)
    khi = np.clip(np.floor(n * A / (2 * np.pi)), 0, half).astype(np.int64)
    # arccos(-1) = pi need not give n / 2 exactly after rounding
    klo = np.where(chi >= 1.0, 0, klo)
    khi = np.where(clo <= -1.0, half, khi)
    cnt = 2 * (khi - klo + 1) - (klo == 0) - ((n % 2 == 0) & (khi == half))
    empty = (clo > 1.0) | (chi < -1.0) | (clo > chi) | (khi < klo)
    return np.where(empty, 0, cnt)


def _strip_polar(mu, phi, t, eps, rows=64):
    r = mu.base.radii
    wr = mu.radial_weights
    n = mu.n_angles
    out = np.zeros(len(eps))
    tt = float(t[0])
    for a0 in range(0, len(r), rows):
        ra = r[a0:a0 + rows, None]
        wa = wr[a0:a0 + rows, None]
        clo_max, chi_max = phi.polar_cos_interval(ra, r[None, :], tt, tt + float(eps[-1]))
        live = (clo_max <= 1.0) & (chi_max >= -1.0)
        if not np.any(live):
            continue
        ia, ib = np.nonzero(live)
        RA, RB = ra[ia, 0], r[ib]
        W = wa[ia, 0] * wr[ib]
        for e, ee in enumerate(eps):
            clo, chi = phi.polar_cos_interval(RA, RB, tt, tt + float(ee))
            out[e] += np.dot(W, angular_count(clo, chi, n)) / n
    return np.minimum(out, 1.0)


def strip_mass(mu, phi, t, eps, method="auto", n_jobs=None):
    """``mu x mu`` mass of the ``eps``-strip above the level ``t`` of ``phi``.

    Parameters
    ----------
    mu : EmpiricalMeasure
    phi : PhiFamily
    t : float or array-like of shape (m,)
    eps : float or array-like
        One or several widths; a vector of widths is handled in one pass.
    method : {'auto', 'brute', 'cells', 'lattice', 'polar'}
        Pair enumeration route. All routes give the same pair set.
    n_jobs : int, optional
        Worker threads (default ``FRACTAL_RVT_THREADS``).

    Returns
    -------
    float or ndarray
    """
    scalar = np.ndim(eps) == 0
    eps_in = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(~(eps_in > 0)):
        raise ValueError("eps must be positive")
    t = check_vector(np.broadcast_to(np.asarray(t, dtype=float), (phi.m,)), phi.m, "t")
    eps_u, inv = np.unique(eps_in, return_inverse=True)

    polar_ok = isinstance(mu, PolarProductMeasure) and phi.polar_cos_interval is not None and phi.m == 1
    sizes = None
    if method in ("auto", "lattice") and phi.kernel is not None and mu.is_uniform() \
            and not isinstance(mu, PolarProductMeasure):
        sizes = _pairs.lattice_shape(mu.base)
    if method == "auto":
        method = "polar" if polar_ok else ("lattice" if sizes is not None else "auto")

    if method == "polar":
        if not polar_ok:
            raise ValueError("polar route needs a PolarProductMeasure and a rotation-invariant phi")
        out = _strip_polar(mu, phi, t, eps_u)
    elif method == "lattice":
        if sizes is None:
            raise ValueError("lattice route needs a uniform measure on a full exact box lattice")
        out = _strip_lattice(mu, phi, t, eps_u, sizes)
    else:
        out = _strip_pairs(mu, phi, t, eps_u, method, n_jobs)
    out = out[inv]
    return float(out[0]) if scalar else out


def fit_strip_exponent(mu, phi, t, eps_list, method="auto", n_jobs=None, min_samples=5):
    """Log-log slope of strip mass against ``eps``.

    Every ``eps`` must be at least twice the resolution of the base set.
    """
    eps = np.sort(np.asarray(eps_list, dtype=float))
    if len(eps) < min_samples:
        raise DegenerateFitError(f"need at least {min_samples} widths, got {len(eps)}")
    if eps[0] < 2.0 * mu.resolution:
        raise DomainError(f"eps={eps[0]:.3g} is below twice the resolution {mu.resolution:.3g}")
    masses = strip_mass(mu, phi, t, eps, method=method, n_jobs=n_jobs)
    wmax = float(mu.radial_weights.max() / mu.n_angles) if isinstance(mu, PolarProductMeasure) \
        else float(mu.weights.max())
    if masses[0] < 10.0 * wmax * wmax:
        warnings.warn("strip mass at the smallest eps is below ten pairs' worth; "
                      "the approximant is saturated", SaturationWarning, stacklevel=2)
    return fit_loglog(eps, masses, label="strip_mass",
                      meta={"phi": phi.name, "t": np.atleast_1d(t).tolist()})


# ---------------------------------------------------------------------------
# Thickened Radon transform
# ---------------------------------------------------------------------------

class GridFunction:
    """Samples of a function at the cell centers of a box grid.

    Parameters
    ----------
    values : ndarray of shape (n_1, ..., n_d)
    lower, upper : array-like of shape (d,)
        Opposite corners of the sampled box.
    """

    def __init__(self, values, lower, upper):
        self.values = np.asarray(values, dtype=float)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.values.ndim != len(self.lower):
            raise ValueError("values must have one axis per coordinate")
        self.d = self.values.ndim

    @property
    def spacing(self):
        return (self.upper - self.lower) / np.array(self.values.shape)

    def centers(self):
        axes = [self.lower[k] + (np.arange(s) + 0.5) * self.spacing[k]
                for k, s in enumerate(self.values.shape)]
        G = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in G], axis=1)

    def boundary_mask(self):
        idx = np.indices(self.values.shape).reshape(self.d, -1).T
        return np.any((idx == 0) | (idx == np.array(self.values.shape) - 1), axis=1)


def sample_function(func, lower, upper, n):
    """Sample ``func`` (rows of points -> values) on an ``n``-per-axis grid."""
    lower = np.asarray(lower, dtype=float)
    check_size(n ** len(lower))
    g = GridFunction(np.zeros((n,) * len(lower)), lower, upper)
    g.values = np.asarray(func(g.centers()), dtype=float).reshape(g.values.shape)
    return g


def radon_apply(phi, f, x, t, eps, psi=None):
    """Thickened generalized Radon transform at ``x``.

    ``eps**-m`` times the grid quadrature of ``f psi`` over
    ``{y : t_l <= phi_l(x, y) and phi_l(x, y) - t_l <= eps}``; ``psi``
    defaults to 1.

    Raises
    ------
    DomainError
        If the strip reaches the boundary cells of the sampled box.
    """
    if not isinstance(f, GridFunction):
        raise TypeError("f must be a GridFunction")
    x = check_vector(x, phi.d, "x")
    t = check_vector(np.broadcast_to(np.asarray(t, dtype=float), (phi.m,)), phi.m, "t")
    Y = f.centers()
    V = phi.values(np.broadcast_to(x, Y.shape), Y)
    D = V - t
    inside = np.all((D >= 0) & (D <= eps), axis=1)
    if np.any(inside & f.boundary_mask()):
        raise DomainError("the strip leaves the sampled domain")
    vals = f.values.ravel()[inside]
    if psi is not None:
        vals = vals * np.asarray(psi(np.broadcast_to(x, (inside.sum(), phi.d)), Y[inside]))
    cell = float(np.prod(f.spacing))
    return math.fsum(vals) * cell / eps ** phi.m
