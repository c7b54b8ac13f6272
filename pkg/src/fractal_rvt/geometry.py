"""Defining-function families, the glued-paraboloid body and its gauge.

A :class:`PhiFamily` bundles ``m`` real functions of a point pair ``(x, y)``
together with their first derivatives, the mixed Hessian, and optional
interval bounds that let pair enumerators prune whole cells of candidates
without evaluating them.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._validation import check_points, check_scalar, check_vector
from .exceptions import SingularLocusError

__all__ = [
    "PhiFamily",
    "ConvexBody",
    "make_phi_euclid",
    "make_phi_dot",
    "make_phi_body_gauge",
    "make_phi_curve_family",
    "gauge",
    "rotational_curvature_det",
    "check_fibration",
    "estimate_lipschitz",
    "fd_step",
]

_DIAG_EPS = 1e-12


def fd_step(x, rel=1e-5):
    """Central-difference step ``rel * (1 + |x|)``, elementwise."""
    return rel * (1.0 + np.abs(x))


def _as_pairs(x, y, d):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    single = x.ndim == 1 and y.ndim == 1
    X = np.atleast_2d(x)
    Y = np.atleast_2d(y)
    if X.shape[1] != d or Y.shape[1] != d:
        raise ValueError(f"points must have dimension {d}")
    X, Y = np.broadcast_arrays(X, Y)
    return X, Y, single


@dataclass(frozen=True)
class PhiFamily:
    """A vector ``(phi_1, ..., phi_m)`` of functions on R^d x R^d.

    ``func(X, Y)`` maps row-paired arrays of shape (k, d) to values of shape
    (k, m). Missing derivative callables fall back to central differences.

    Optional fast-path hooks used by the pair enumerators:

    kernel
        ``f(V) -> (k, m)`` with ``phi(x, y) = f(x - y)``.
    kernel_bounds
        ``(lo, hi) -> (vlo, vhi)``: guaranteed value range of ``f`` over
        boxes of difference vectors.
    pair_bounds
        ``(xlo, xhi, ylo, yhi) -> (vlo, vhi)`` for functions that are not
        translation invariant.
    polar_cos_interval
        ``(r, rho, lo, hi) -> (clo, chi)`` for rotation-invariant ``m = 1``
        functions: ``lo <= phi(r w, rho w') <= hi`` iff ``clo <= cos <= chi``
        where ``cos`` is the cosine of the angle between ``w`` and ``w'``.
    """

    name: str
    d: int
    m: int
    func: Callable
    grad_x_func: Optional[Callable] = None
    grad_y_func: Optional[Callable] = None
    mixed_hessian_func: Optional[Callable] = None
    symmetric: bool = False
    singular_on_diagonal: bool = False
    kernel: Optional[Callable] = None
    kernel_bounds: Optional[Callable] = None
    pair_bounds: Optional[Callable] = None
    polar_cos_interval: Optional[Callable] = None
    lipschitz: Optional[float] = None
    params: dict = field(default_factory=dict)

    # -- evaluation ---------------------------------------------------------
    def values(self, X, Y):
        """Batched values, shape (k, m)."""
        return np.asarray(self.func(X, Y), dtype=float).reshape(len(X), self.m)

    def value(self, x, y):
        X, Y, single = _as_pairs(x, y, self.d)
        v = self.values(X, Y)
        return v[0] if single else v

    def _check_regular(self, X, Y):
        if self.singular_on_diagonal:
            gap = np.max(np.abs(X - Y), axis=1)
            if np.any(gap <= _DIAG_EPS * (1.0 + np.max(np.abs(X), axis=1))):
                raise SingularLocusError(f"{self.name} is not differentiable on the diagonal x = y")

    def _fd_grad(self, X, Y, wrt):
        k = len(X)
        out = np.empty((k, self.m, self.d))
        base = X if wrt == "x" else Y
        for i in range(self.d):
            h = fd_step(base[:, i])
            P = base.copy()
            M = base.copy()
            P[:, i] += h
            M[:, i] -= h
            if wrt == "x":
                fp, fm = self.values(P, Y), self.values(M, Y)
            else:
                fp, fm = self.values(X, P), self.values(X, M)
            out[:, :, i] = (fp - fm) / (2 * h[:, None])
        return out

    def grad_x(self, x, y):
        """Gradient in ``x``: shape (m, d), or (k, m, d) for batches."""
        X, Y, single = _as_pairs(x, y, self.d)
        self._check_regular(X, Y)
        if self.grad_x_func is not None:
            g = np.asarray(self.grad_x_func(X, Y), dtype=float).reshape(len(X), self.m, self.d)
        else:
            g = self._fd_grad(X, Y, "x")
        return g[0] if single else g

    def grad_y(self, x, y):
        X, Y, single = _as_pairs(x, y, self.d)
        self._check_regular(X, Y)
        if self.grad_y_func is not None:
            g = np.asarray(self.grad_y_func(X, Y), dtype=float).reshape(len(X), self.m, self.d)
        else:
            g = self._fd_grad(X, Y, "y")
        return g[0] if single else g

    def fd_grad_x(self, x, y):
        """Central-difference gradient in ``x`` regardless of analytic hooks."""
        X, Y, single = _as_pairs(x, y, self.d)
        g = self._fd_grad(X, Y, "x")
        return g[0] if single else g

    def fd_grad_y(self, x, y):
        X, Y, single = _as_pairs(x, y, self.d)
        g = self._fd_grad(X, Y, "y")
        return g[0] if single else g

    def fd_mixed_hessian(self, x, y, rel=1e-4):
        """Second central differences for d2 phi / dx_i dy_j, shape (m, d, d)."""
        X, Y, single = _as_pairs(x, y, self.d)
        k = len(X)
        H = np.empty((k, self.m, self.d, self.d))
        for i in range(self.d):
            hi = fd_step(X[:, i], rel)
            for j in range(self.d):
                hj = fd_step(Y[:, j], rel)
                acc = 0.0
                for si in (1, -1):
                    for sj in (1, -1):
                        XP = X.copy()
                        YP = Y.copy()
                        XP[:, i] += si * hi
                        YP[:, j] += sj * hj
                        acc = acc + si * sj * self.values(XP, YP)
                H[:, :, i, j] = acc / (4 * hi * hj)[:, None]
        return H[0] if single else H

    def mixed_hessian(self, x, y):
        """Matrix of d2 phi_l / dx_i dy_j: shape (m, d, d)."""
        X, Y, single = _as_pairs(x, y, self.d)
        self._check_regular(X, Y)
        if self.mixed_hessian_func is not None:
            H = np.asarray(self.mixed_hessian_func(X, Y), dtype=float).reshape(
                len(X), self.m, self.d, self.d)
        else:
            H = self.fd_mixed_hessian(X, Y)
        return H[0] if single else H


# ---------------------------------------------------------------------------
# Euclidean distance
# ---------------------------------------------------------------------------

def _box_norm_range(lo, hi):
    near = np.clip(0.0, lo, hi)
    far = np.maximum(np.abs(lo), np.abs(hi))
    return np.linalg.norm(near, axis=1), np.linalg.norm(far, axis=1)


def make_phi_euclid(d):
    """``phi(x, y) = |x - y|``, singular on the diagonal."""
    check_scalar(d, "d", min_val=2, integer=True)

    def func(X, Y):
        return np.linalg.norm(X - Y, axis=1)[:, None]

    def grad_x(X, Y):
        V = X - Y
        return (V / np.linalg.norm(V, axis=1)[:, None])[:, None, :]

    def grad_y(X, Y):
        return -grad_x(X, Y)

    def mixed(X, Y):
        V = X - Y
        r = np.linalg.norm(V, axis=1)
        U = V / r[:, None]
        P = np.eye(d)[None] - U[:, :, None] * U[:, None, :]
        return (-P / r[:, None, None])[:, None]

    def kernel(V):
        return np.linalg.norm(V, axis=1)[:, None]

    def kernel_bounds(lo, hi):
        a, b = _box_norm_range(lo, hi)
        return a[:, None], b[:, None]

    def polar(r, rho, lo, hi):
        den = 2.0 * r * rho
        s = r * r + rho * rho
        lo = np.maximum(lo, 0.0)
        return (s - hi * hi) / den, (s - lo * lo) / den

    return PhiFamily("euclid", d, 1, func, grad_x, grad_y, mixed, symmetric=True,
                     singular_on_diagonal=True, kernel=kernel,
                     kernel_bounds=kernel_bounds, polar_cos_interval=polar,
                     lipschitz=1.0, params={"d": d})


# ---------------------------------------------------------------------------
# Dot product
# ---------------------------------------------------------------------------

def _interval_product(alo, ahi, blo, bhi):
    c = np.stack([alo * blo, alo * bhi, ahi * blo, ahi * bhi])
    return c.min(axis=0), c.max(axis=0)


def make_phi_dot(d):
    """``phi(x, y) = x . y``, smooth everywhere."""
    check_scalar(d, "d", min_val=2, integer=True)

    def func(X, Y):
        return np.einsum("ij,ij->i", X, Y)[:, None]

    def grad_x(X, Y):
        return Y[:, None, :].copy()

    def grad_y(X, Y):
        return X[:, None, :].copy()

    def mixed(X, Y):
        return np.broadcast_to(np.eye(d), (len(X), 1, d, d)).copy()

    def pair_bounds(xlo, xhi, ylo, yhi):
        plo, phi_ = _interval_product(xlo, xhi, ylo, yhi)
        return plo.sum(axis=1)[:, None], phi_.sum(axis=1)[:, None]

    def polar(r, rho, lo, hi):
        u = r * rho
        return lo / u, hi / u

    return PhiFamily("dot", d, 1, func, grad_x, grad_y, mixed, symmetric=True,
                     pair_bounds=pair_bounds, polar_cos_interval=polar,
                     params={"d": d})


# ---------------------------------------------------------------------------
# Glued-paraboloid body
# ---------------------------------------------------------------------------

def _smooth_abs(z, eta):
    """Even C^2 convex function equal to ``|z| - 3 eta / 8`` for ``|z| >= eta``."""
    a = np.abs(z)
    inner = 0.75 * a * a / eta - a ** 4 / (8.0 * eta ** 3)
    return np.where(a >= eta, a - 0.375 * eta, inner)


@dataclass(frozen=True)
class ConvexBody:
    """Two paraboloid caps ``|x_d| <= 1 - |x'|^2`` glued along ``|x'| = 1``.

    The body is the sublevel set ``{|x'|^2 + s(x_d) + 3 eta / 8 <= 1}`` where
    ``s`` is a C^2 convex smoothing of ``|x_d|`` that agrees with
    ``|x_d| - 3 eta / 8`` once ``|x_d| >= eta``. With ``eta = 1 - (1 - h)^2``
    the boundary is exactly the glued paraboloid for ``|x'| <= 1 - h`` and is
    smoothed only inside the band ``1 - h < |x'| <= 1`` around the ridge.
    Convexity is inherited from the defining function.
    """

    d: int
    h: float = 0.1

    def __post_init__(self):
        check_scalar(self.d, "d", min_val=2, integer=True)
        check_scalar(self.h, "h", min_val=0.0, max_val=0.5, include_min=False,
                     include_max=False)

    @property
    def band_start(self):
        return 1.0 - self.h

    @property
    def eta(self):
        return 1.0 - self.band_start ** 2

    @property
    def ridge_radius(self):
        """``|x'|`` of the smoothed ridge (where ``x_d = 0``)."""
        return float(np.sqrt(1.0 - 0.375 * self.eta))

    def defining(self, V):
        """Convex defining function; the body is ``{defining <= 1}``."""
        V = np.atleast_2d(np.asarray(V, dtype=float))
        r2 = np.sum(V[:, :-1] ** 2, axis=1)
        return r2 + _smooth_abs(V[:, -1], self.eta) + 0.375 * self.eta

    def height(self, r):
        """Upper boundary height ``x_d`` over ``|x'| = r`` (``nan`` past the ridge)."""
        r = np.asarray(r, dtype=float)
        eta = self.eta
        para = 1.0 - r * r
        c = np.maximum(1.0 - 0.375 * eta - r * r, 0.0)
        disc = np.maximum(9.0 * eta ** 4 - 8.0 * eta ** 3 * c, 0.0)
        inner = np.sqrt(np.maximum(3.0 * eta ** 2 - np.sqrt(disc), 0.0))
        out = np.where(para >= eta, para, inner)
        return np.where(r <= self.ridge_radius, out, np.nan)

    def contains(self, V):
        return self.defining(V) <= 1.0

    def gauge(self, V, method="auto", iterations=60):
        """Minkowski functional of each row of ``V``.

        ``method="bisection"`` always bisects on the radial membership test.
        ``"auto"`` first solves the paraboloid equation in closed form and
        only bisects rows whose boundary point falls inside the smoothing band.
        """
        V = np.asarray(V, dtype=float)
        single = V.ndim == 1
        V = np.atleast_2d(V)
        if V.shape[1] != self.d:
            raise ValueError(f"vectors must have dimension {self.d}")
        r = np.linalg.norm(V[:, :-1], axis=1)
        z = np.abs(V[:, -1])
        out = np.zeros(len(V))
        todo = (r > 0) | (z > 0)
        if method == "auto":
            lam = 0.5 * (z + np.sqrt(z * z + 4.0 * r * r))
            ok = todo & (z >= self.eta * lam)
            out[ok] = lam[ok]
            todo &= ~ok
        elif method != "bisection":
            raise ValueError(f"unknown method {method!r}")
        if np.any(todo):
            out[todo] = self._bisect(r[todo], z[todo],
                                     np.max(np.abs(V[todo]), axis=1), iterations)
        return out[0] if single else out

    def _bisect(self, r, z, vmax, iterations):
        lo = np.zeros_like(r)
        hi = 4.0 * vmax
        eta = self.eta
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            rr = r / mid
            f = rr * rr + _smooth_abs(z / mid, eta) + 0.375 * eta
            inside = f <= 1.0
            hi = np.where(inside, mid, hi)
            lo = np.where(inside, lo, mid)
        return hi

    @property
    def cone_scale(self):
        """``c`` such that B contains the double cone ``|x'| + |x_d| <= c``."""
        return self.ridge_radius

    @property
    def lipschitz(self):
        # B sits inside |x'|, |x_d| <= 1 and contains the cone of scale c, so
        # max(|v'|, |v_d|) <= ||v||_B <= (|v'| + |v_d|) / c <= sqrt(2) |v| / c.
        return float(np.sqrt(2.0) / self.cone_scale)

    def gauge_bounds(self, lo, hi):
        """Guaranteed range of the gauge over boxes ``[lo, hi]`` (rows)."""
        lo = np.atleast_2d(lo)
        hi = np.atleast_2d(hi)
        c = 0.5 * (lo + hi)
        rad = 0.5 * np.linalg.norm(hi - lo, axis=1)
        gc = self.gauge(c)
        near = np.clip(0.0, lo, hi)
        far = np.maximum(np.abs(lo), np.abs(hi))
        low = np.maximum(np.linalg.norm(near[:, :-1], axis=1), np.abs(near[:, -1]))
        up = (np.linalg.norm(far[:, :-1], axis=1) + far[:, -1]) / self.cone_scale
        return (np.maximum(low, gc - self.lipschitz * rad),
                np.minimum(up, gc + self.lipschitz * rad))


def gauge(body, v):
    """``inf{lam > 0 : v / lam in B}`` for a single vector or rows of ``v``."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        check_vector(v, body.d, "v")
    return body.gauge(v)


def make_phi_body_gauge(body):
    """``phi(x, y) = ||x - y||_B``; derivatives by central differences."""
    if not isinstance(body, ConvexBody):
        raise TypeError("body must be a ConvexBody")

    def func(X, Y):
        return body.gauge(X - Y)[:, None]

    def kernel(V):
        return body.gauge(V)[:, None]

    def kernel_bounds(lo, hi):
        a, b = body.gauge_bounds(lo, hi)
        return a[:, None], b[:, None]

    return PhiFamily("body_gauge", body.d, 1, func, symmetric=True,
                     singular_on_diagonal=True, kernel=kernel,
                     kernel_bounds=kernel_bounds, lipschitz=body.lipschitz,
                     params={"d": body.d, "h": body.h})


# ---------------------------------------------------------------------------
# Curve families
# ---------------------------------------------------------------------------

def _poly_range(coef, lo, hi):
    """Exact range of an ascending-coefficient polynomial over [lo, hi] (arrays)."""
    p = np.polynomial.Polynomial(coef)
    vals = [p(lo), p(hi)]
    dp = p.deriv()
    if dp.degree() >= 1:
        for root in dp.roots():
            if abs(root.imag) < 1e-12:
                x = root.real
                inside = (lo <= x) & (x <= hi)
                vals.append(np.where(inside, p(x), p(lo)))
    vals = np.stack(vals)
    return vals.min(axis=0), vals.max(axis=0)


def make_phi_curve_family(d, curve_coeffs=None):
    """``phi_l(x, y) = (x_{l+1} - y_{l+1}) - gamma_l(x_1 - y_1)``, ``m = d - 1``.

    ``curve_coeffs[l]`` holds ascending polynomial coefficients of
    ``gamma_l``; the default is the moment curve ``gamma_l(s) = s**(l + 1)``.
    """
    check_scalar(d, "d", min_val=2, integer=True)
    if curve_coeffs is None:
        curve_coeffs = [[0.0] * (l + 1) + [1.0] for l in range(1, d)]
    curve_coeffs = [np.asarray(c, dtype=float) for c in curve_coeffs]
    if len(curve_coeffs) != d - 1:
        raise ValueError(f"need {d - 1} curve components, got {len(curve_coeffs)}")
    polys = [np.polynomial.Polynomial(c) for c in curve_coeffs]
    d1 = [p.deriv() for p in polys]
    d2 = [p.deriv(2) for p in polys]
    m = d - 1

    def kernel(V):
        s = V[:, 0]
        return np.stack([V[:, l + 1] - polys[l](s) for l in range(m)], axis=1)

    def func(X, Y):
        return kernel(X - Y)

    def grad_x(X, Y):
        s = X[:, 0] - Y[:, 0]
        g = np.zeros((len(X), m, d))
        for l in range(m):
            g[:, l, 0] = -d1[l](s)
            g[:, l, l + 1] = 1.0
        return g

    def grad_y(X, Y):
        return -grad_x(X, Y)

    def mixed(X, Y):
        s = X[:, 0] - Y[:, 0]
        H = np.zeros((len(X), m, d, d))
        for l in range(m):
            H[:, l, 0, 0] = d2[l](s)
        return H

    def kernel_bounds(lo, hi):
        vlo = np.empty((len(lo), m))
        vhi = np.empty((len(lo), m))
        for l in range(m):
            glo, ghi = _poly_range(curve_coeffs[l], lo[:, 0], hi[:, 0])
            vlo[:, l] = lo[:, l + 1] - ghi
            vhi[:, l] = hi[:, l + 1] - glo
        return vlo, vhi

    return PhiFamily("curve", d, m, func, grad_x, grad_y, mixed, kernel=kernel,
                     kernel_bounds=kernel_bounds,
                     params={"d": d, "curve_coeffs": [c.tolist() for c in curve_coeffs]})


# ---------------------------------------------------------------------------
# Hypothesis checks
# ---------------------------------------------------------------------------

def rotational_curvature_det(phi, x, y):
    """Determinant of the bordered matrix ``[[0, grad_x], [-grad_y^T, D_xy]]``.

    Nonvanishing on the level set is the rotational curvature condition for
    the averaging operator defined by ``phi``.
    """
    if phi.m != 1:
        raise ValueError("rotational curvature is defined for m = 1 families")
    x = check_vector(x, phi.d, "x")
    y = check_vector(y, phi.d, "y")
    gx = phi.grad_x(x, y)[0]
    gy = phi.grad_y(x, y)[0]
    H = phi.mixed_hessian(x, y)[0]
    d = phi.d
    M = np.zeros((d + 1, d + 1))
    M[0, 1:] = gx
    M[1:, 0] = -gy
    M[1:, 1:] = H
    return float(np.linalg.det(M))


def check_fibration(phi, x, y, tol=1e-10):
    """Whether ``{grad_x phi_l}`` and ``{grad_y phi_l}`` are each independent.

    Independence is judged by the Gram determinant exceeding ``tol``.
    Returns ``(ok_x, ok_y)``.
    """
    x = check_vector(x, phi.d, "x")
    y = check_vector(y, phi.d, "y")
    gx = phi.grad_x(x, y)
    gy = phi.grad_y(x, y)
    return (bool(np.linalg.det(gx @ gx.T) > tol), bool(np.linalg.det(gy @ gy.T) > tol))


def estimate_lipschitz(phi, X, n_samples=2000, seed=0, use_known=False):
    """Sampled per-argument Lipschitz constant of ``phi`` on the cloud ``X``.

    Returns the larger of ``max |grad_x phi_l|`` and ``max |grad_y phi_l|``
    over random off-diagonal pairs. With ``use_known=True`` a proven global
    constant carried by the family is returned instead.
    """
    if use_known and phi.lipschitz is not None:
        return float(phi.lipschitz)
    X = check_points(X, phi.d)
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(X), n_samples)
    j = rng.integers(0, len(X), n_samples)
    keep = np.any(X[i] != X[j], axis=1)
    if not np.any(keep):
        return 0.0
    A, B = X[i[keep]], X[j[keep]]
    gx = np.linalg.norm(phi.grad_x(A, B), axis=-1)
    gy = np.linalg.norm(phi.grad_y(A, B), axis=-1)
    return float(max(gx.max(), gy.max()))
