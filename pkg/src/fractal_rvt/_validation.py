"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""
import numbers
import os

import numpy as np
from sklearn.utils import check_array

from .exceptions import SizeCapError

#: Default cap on materialized point counts.
MAX_POINTS = int(os.environ.get("FRACTAL_RVT_MAX_POINTS", 2_000_000))
#: Default cap on explicitly enumerated point pairs.
MAX_PAIRS = int(os.environ.get("FRACTAL_RVT_MAX_PAIRS", 2_000_000_000))


def check_points(X, d=None, name="X"):
    """Return ``X`` as a finite float64 array of shape (n, d).

    A 1-d input is read as n points on the line.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X = check_array(X, dtype=np.float64, ensure_min_samples=0, input_name=name)
    if d is not None and X.shape[1] != d:
        raise ValueError(f"{name} has dimension {X.shape[1]}, expected {d}")
    return X


def check_vector(v, d=None, name="v"):
    v = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    if d is not None and v.shape[0] != d:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {d}")
    return v


def check_scalar(x, name, *, min_val=None, max_val=None, include_min=True,
                 include_max=True, integer=False):
    """Validate a scalar parameter and return it."""
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(x, bool) or not isinstance(x, kind):
        raise TypeError(f"{name} must be {'an integer' if integer else 'a real number'}, got {x!r}")
    if min_val is not None and (x < min_val or (not include_min and x == min_val)):
        raise ValueError(f"{name}={x} is out of range (min {min_val})")
    if max_val is not None and (x > max_val or (not include_max and x == max_val)):
        raise ValueError(f"{name}={x} is out of range (max {max_val})")
    return x


def check_size(count, cap=None, what="points"):
    cap = MAX_POINTS if cap is None else cap
    if count > cap:
        raise SizeCapError(f"{count} {what} exceeds the cap of {cap}")
    return count


def n_threads():
    """Worker count from ``FRACTAL_RVT_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("FRACTAL_RVT_THREADS", "1")))
    except ValueError:
        return 1
