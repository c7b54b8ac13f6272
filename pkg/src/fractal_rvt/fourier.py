"""Fourier transforms of arc-length-parametrized curve and sphere measures.

All integrals are oscillatory integrals over an interval, evaluated by
composite Gauss-Legendre quadrature whose panel width shrinks with the
frequency, checked against a run with twice as many panels.
"""
import math

import numpy as np

from .exceptions import QuadratureError
from .measures import fit_loglog
from ._validation import check_scalar, check_vector

__all__ = [
    "oscillatory_integral",
    "curve_measure_fourier",
    "curve_speed_bound",
    "decay_exponent",
    "sphere_measure_fourier",
    "sphere_decay_exponent",
    "degenerate_direction",
    "XI_MAX",
]

XI_MAX = 2.0 ** 16
_ORDER = 16
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(_ORDER)


def _composite_gl(f, a, b, panels, chunk=1 << 16):
    h = (b - a) / panels
    total = 0.0 + 0.0j
    for p0 in range(0, panels, chunk):
        p = np.arange(p0, min(p0 + chunk, panels))
        x = a + h * (p[:, None] + 0.5 * (_NODES[None, :] + 1.0))
        total += np.sum(f(x) * _WEIGHTS[None, :])
    return total * 0.5 * h


def oscillatory_integral(f, a, b, rate, tol=1e-8, max_doublings=4):
    """``int_a^b f`` for an integrand oscillating at most ``rate`` cycles per unit.

    The starting panel width is ``1 / (8 pi rate)``: at least four panels
    per radian of phase. The panel count is doubled until two consecutive
    results agree within ``tol``.

    Raises
    ------
    QuadratureError
        If the estimates have not converged after ``max_doublings``.
    """
    panels = max(1, int(math.ceil((b - a) * 8.0 * math.pi * max(rate, 0.0))))
    prev = _composite_gl(f, a, b, panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = _composite_gl(f, a, b, panels)
        if abs(cur - prev) <= tol:
            return complex(cur)
        prev = cur
    raise QuadratureError(f"no convergence to {tol:g} with {panels} panels")


def _curve_polys(curve_coeffs, d):
    if curve_coeffs is None:
        curve_coeffs = [[0.0] * (l + 1) + [1.0] for l in range(1, d)]
    if len(curve_coeffs) != d - 1:
        raise ValueError(f"need {d - 1} curve components, got {len(curve_coeffs)}")
    return [np.polynomial.Polynomial(np.asarray(c, dtype=float)) for c in curve_coeffs]


def curve_speed_bound(curve_coeffs, d):
    """Upper bound for ``|Gamma'(s)|`` on [0, 1] (maximum over a fine grid, padded)."""
    polys = _curve_polys(curve_coeffs, d)
    s = np.linspace(0.0, 1.0, 2049)
    speed = np.sqrt(1.0 + sum(p.deriv()(s) ** 2 for p in polys))
    return float(speed.max() * 1.01)


def curve_measure_fourier(curve_coeffs, d, xi, tol=1e-8):
    """``int_0^1 exp(-2 pi i xi . Gamma(s)) ds`` with ``Gamma(s) = (s, gamma_1(s), ...)``.

    Parameters
    ----------
    curve_coeffs : list of array-like or None
        Ascending coefficients of ``gamma_l``; None selects the moment curve.
    d : int
    xi : array-like of shape (d,)
        ``|xi| <= 2**16``.
    """
    check_scalar(d, "d", min_val=2, integer=True)
    xi = check_vector(xi, d, "xi")
    nrm = float(np.linalg.norm(xi))
    if nrm > XI_MAX:
        raise QuadratureError(f"|xi| = {nrm:g} exceeds the supported maximum {XI_MAX:g}")
    polys = _curve_polys(curve_coeffs, d)
    phase = np.polynomial.Polynomial([0.0, xi[0]])
    for l, p in enumerate(polys):
        phase = phase + xi[l + 1] * p

    def f(s):
        return np.exp(-2j * np.pi * phase(s))

    return oscillatory_integral(f, 0.0, 1.0, nrm * curve_speed_bound(curve_coeffs, d), tol)


def degenerate_direction(d):
    """Unit direction whose phase has a maximally degenerate critical point at ``s = 1/2``.

    For the parabola (``d = 2``) this is ``(0, 1)``; for the ``d = 3``
    moment curve, ``xi . Gamma`` has vanishing first and second derivative
    at ``s = 1/2``.
    """
    if d == 2:
        v = np.array([0.0, 1.0])
    elif d == 3:
        v = np.array([0.75, -1.5, 1.0])
    else:
        raise ValueError("worst directions are tabulated for d = 2, 3")
    return v / np.linalg.norm(v)


def decay_exponent(curve_coeffs, d, direction, lambda_list, tol=1e-8, max_residual=0.2):
    """Slope of ``log |sigma_hat(lambda * direction)|`` against ``log lambda``."""
    lam = np.sort(np.asarray(lambda_list, dtype=float))
    if len(lam) < 5:
        raise ValueError("need at least five frequencies")
    u = check_vector(direction, d, "direction")
    u = u / np.linalg.norm(u)
    vals = np.array([abs(curve_measure_fourier(curve_coeffs, d, x * u, tol)) for x in lam])
    rep = fit_loglog(lam, vals, label="curve_decay", meta={"d": d, "direction": u.tolist()})
    rep.meta["oscillation_dominated"] = bool(rep.residual > max_residual)
    return rep


def sphere_measure_fourier(d, t, xi, tol=1e-8):
    """Fourier transform of normalized surface measure on the sphere of radius ``t``.

    ``d = 3`` uses ``(1/2) int_{-1}^{1} exp(-2 pi i t |xi| u) du`` and
    ``d = 2`` uses ``(1/pi) int_0^pi exp(-2 pi i t |xi| cos theta) d theta``.
    """
    check_scalar(t, "t", min_val=0, include_min=False)
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    xi = check_vector(xi, d, "xi")
    k = t * float(np.linalg.norm(xi))
    if k > XI_MAX:
        raise QuadratureError(f"t |xi| = {k:g} exceeds the supported maximum {XI_MAX:g}")
    if d == 3:
        return 0.5 * oscillatory_integral(lambda u: np.exp(-2j * np.pi * k * u), -1.0, 1.0, k, tol)
    return oscillatory_integral(lambda th: np.exp(-2j * np.pi * k * np.cos(th)),
                                0.0, np.pi, k, tol) / np.pi


def sphere_decay_exponent(d, t, lambda_list, tol=1e-8):
    """Slope of ``log |sigma_hat_t(lambda e_1)|`` against ``log lambda``."""
    lam = np.sort(np.asarray(lambda_list, dtype=float))
    e = np.zeros(d)
    e[0] = 1.0
    vals = np.array([abs(sphere_measure_fourier(d, t, x * e, tol)) for x in lam])
    return fit_loglog(lam, vals, label="sphere_decay", meta={"d": d, "t": t})
