"""scikit-learn style wrappers around the dimension and strip-mass tools.

Each estimator takes a plain ``(n_samples, n_features)`` array of points,
validates it with scikit-learn's helpers and stores fitted attributes with
a trailing underscore.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dimension import dyadic_scales, minkowski_dim_estimate
from .fractal_sets import PointSet
from .geometry import ConvexBody, make_phi_body_gauge, make_phi_dot, make_phi_euclid
from .measures import EmpiricalMeasure, ball_mass_profile, fit_strip_exponent, uniform_measure

__all__ = ["BoxCountingDimension", "StripMassExponent", "LocalMassExponent", "make_phi"]


def make_phi(name, d):
    """PhiFamily by name: ``'euclid'``, ``'dot'`` or ``'gauge'``."""
    if name == "euclid":
        return make_phi_euclid(d)
    if name == "dot":
        return make_phi_dot(d)
    if name == "gauge":
        return make_phi_body_gauge(ConvexBody(d))
    raise ValueError(f"unknown phi {name!r}")


def _measure(X, resolution, sample_weight):
    P = PointSet(X, resolution, "sample")
    if sample_weight is None:
        return uniform_measure(P)
    w = np.asarray(sample_weight, dtype=float)
    return EmpiricalMeasure(P, w / w.sum())


class BoxCountingDimension(BaseEstimator):
    """Box-counting dimension of a point cloud.

    Parameters
    ----------
    deltas : array-like, optional
        Box sizes. Defaults to dyadic sizes from the cloud's extent down to
        ``resolution``.
    resolution : float
        Half-width of the neighborhood each point stands for.

    Attributes
    ----------
    dimension_ : float
    counts_ : ndarray
    deltas_ : ndarray
    """

    def __init__(self, deltas=None, resolution=1e-3):
        self.deltas = deltas
        self.resolution = resolution

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if self.deltas is None:
            span = float(np.max(np.ptp(X, axis=0))) or 1.0
            deltas = dyadic_scales(self.resolution, min(span, 1.0) / 2)
        else:
            deltas = np.asarray(self.deltas, dtype=float)
        rep = minkowski_dim_estimate(PointSet(X, self.resolution, "sample"), deltas)
        self.report_ = rep
        self.dimension_ = rep.exponent
        self.deltas_ = np.sort(deltas)[::-1]
        self.counts_ = np.asarray(rep.meta["counts"])
        return self


class StripMassExponent(BaseEstimator):
    """Exponent of ``mu x mu{t <= phi <= t + eps}`` as ``eps -> 0``.

    Parameters
    ----------
    phi : {'euclid', 'dot', 'gauge'}
    t : float
    eps : array-like
        At least five widths, each at least twice ``resolution``.
    resolution : float
    method : str
        Pair enumeration route passed to :func:`strip_mass`.
    """

    def __init__(self, phi="euclid", t=0.5, eps=(2 ** -2, 2 ** -3, 2 ** -4, 2 ** -5, 2 ** -6),
                 resolution=0.0, method="auto"):
        self.phi = phi
        self.t = t
        self.eps = eps
        self.resolution = resolution
        self.method = method

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, dtype=np.float64)
        mu = _measure(X, self.resolution, sample_weight)
        rep = fit_strip_exponent(mu, make_phi(self.phi, X.shape[1]), self.t, self.eps, self.method)
        self.report_ = rep
        self.exponent_ = rep.exponent
        self.intercept_ = rep.intercept
        return self

    def predict(self, eps):
        """Fitted power law ``exp(intercept) * eps**exponent``."""
        check_is_fitted(self, "exponent_")
        eps = np.asarray(eps, dtype=float)
        return np.exp(self.intercept_) * eps ** self.exponent_


class LocalMassExponent(TransformerMixin, BaseEstimator):
    """Local ball-mass exponents of the fitted empirical measure.

    ``transform(Y)`` returns, for each row of ``Y``, the slope of
    ``log mu(B_delta(y))`` against ``log delta``.
    """

    def __init__(self, deltas=(2 ** -2, 2 ** -3, 2 ** -4, 2 ** -5), resolution=0.0):
        self.deltas = deltas
        self.resolution = resolution

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, dtype=np.float64)
        self.measure_ = _measure(X, self.resolution, sample_weight)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "measure_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return np.array([[ball_mass_profile(self.measure_, x, self.deltas).exponent] for x in X])
