"""Finite approximants of the explicit sets used in the experiments.

Every set is stored as a cloud of centers together with a resolution
``delta``: the cloud stands for the ``delta``-neighborhood of its centers.
Lattice constructions additionally keep exact integer numerators and
per-axis denominators so that incidence and membership tests can run in
exact arithmetic.
"""
import csv
import io
import json
import math
import warnings
from fractions import Fraction

import numpy as np

from ._validation import MAX_POINTS, check_points, check_scalar, check_size
from .exceptions import OverflowGuardWarning

__all__ = [
    "PointSet",
    "IntervalSet",
    "PolarPointSet",
    "ParaboloidFamily",
    "build_grid",
    "build_valtr",
    "build_paraboloid_family",
    "build_lattice_E",
    "build_q_sequence",
    "cantor_intervals",
    "build_cantor",
    "build_F",
    "build_M2",
    "lattice_extent",
]

INT64_MAX = np.iinfo(np.int64).max


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


class PointSet:
    """Immutable cloud of centers in R^d standing for their ``resolution``-neighborhood.

    Parameters
    ----------
    points : array-like of shape (n, d)
    resolution : float
        Neighborhood half-width the cloud represents.
    label : str
        Construction name.
    params : dict, optional
        Construction parameters (JSON-serializable).
    numerators, denominators : optional
        Exact coordinates ``numerators[:, k] / denominators[k]``.
    """

    def __init__(self, points, resolution, label="points", params=None,
                 numerators=None, denominators=None):
        if numerators is not None:
            numerators = np.asarray(numerators, dtype=np.int64)
            denominators = tuple(int(q) for q in denominators)
            if numerators.ndim != 2 or numerators.shape[1] != len(denominators):
                raise ValueError("numerators and denominators disagree in dimension")
            if points is None:
                points = numerators / np.asarray(denominators, dtype=float)
            self._numerators = _readonly(numerators)
        else:
            self._numerators = None
        self._denominators = denominators
        if points is not None:
            self._points = _readonly(check_points(points))
        self.resolution = float(resolution)
        if not self.resolution >= 0:
            raise ValueError("resolution must be nonnegative")
        self.label = label
        self.params = dict(params or {})

    # -- basic accessors ----------------------------------------------------
    @property
    def points(self):
        return self._points

    @property
    def d(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return f"{type(self).__name__}(label={self.label!r}, n={len(self)}, d={self.d}, resolution={self.resolution:.3g})"

    @property
    def numerators(self):
        return self._numerators

    @property
    def denominators(self):
        return self._denominators

    @property
    def is_exact(self):
        return self._numerators is not None

    def bounding_box(self):
        P = self.points
        return P.min(axis=0), P.max(axis=0)

    def diameter(self):
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def exact_points(self):
        """Coordinates as tuples of :class:`fractions.Fraction`."""
        if not self.is_exact:
            raise ValueError("point set has no exact representation")
        dens = self._denominators
        return [tuple(Fraction(int(a), q) for a, q in zip(row, dens)) for row in self._numerators]

    def has_duplicates(self):
        key = self._numerators if self.is_exact else self.points
        return len(np.unique(key, axis=0)) != len(key)

    def subset(self, index, label=None):
        index = np.asarray(index)
        num = self._numerators[index] if self.is_exact else None
        return PointSet(self.points[index], self.resolution, label or self.label,
                        self.params, num, self._denominators)

    # -- serialization ------------------------------------------------------
    def descriptor(self):
        return {
            "construction": self.label,
            "params": self.params,
            "resolution": self.resolution,
            "count": len(self),
            "dimension": self.d,
            "exact": self.is_exact,
        }

    def to_json(self):
        return json.dumps(self.descriptor(), sort_keys=True, indent=2)

    def to_csv(self, f=None):
        """Write one point per row; exact coordinates as ``p/q`` strings.

        Returns the CSV text when ``f`` is None.
        """
        buf = io.StringIO() if f is None else f
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{k + 1}" for k in range(self.d)])
        if self.is_exact:
            for row in self.exact_points():
                w.writerow([str(c) for c in row])
        else:
            for row in self.points:
                w.writerow([repr(float(c)) for c in row])
        if f is None:
            return buf.getvalue()

    @classmethod
    def from_csv(cls, text, resolution, label="points"):
        rows = list(csv.reader(io.StringIO(text)))[1:]
        if rows and any("/" in c for c in rows[0]):
            fr = [[Fraction(c) for c in r] for r in rows]
            d = len(fr[0])
            dens = [math.lcm(*(x[k].denominator for x in fr)) for k in range(d)]
            num = [[int(x[k] * dens[k]) for k in range(d)] for x in fr]
            return cls(None, resolution, label, numerators=num, denominators=dens)
        return cls(np.array(rows, dtype=float), resolution, label)


class IntervalSet(PointSet):
    """Centers of disjoint intervals on the line, with their lengths."""

    def __init__(self, centers, lengths, label, params=None):
        centers = np.asarray(centers, dtype=float)
        order = np.argsort(centers, kind="stable")
        self.lengths = _readonly(np.asarray(lengths, dtype=float)[order])
        super().__init__(centers[order][:, None], float(np.max(self.lengths)), label, params)

    @property
    def lefts(self):
        return self.points[:, 0] - 0.5 * self.lengths

    @property
    def rights(self):
        return self.points[:, 0] + 0.5 * self.lengths


class PolarPointSet(PointSet):
    """``{r w : r in radii, w = (cos 2 pi j / n, sin 2 pi j / n)}`` in the plane.

    Points are ordered radius-major (index ``a * n_angles + j``) and only
    materialized on demand, so very fine angular grids stay cheap for
    algorithms that work on the polar structure directly.
    """

    def __init__(self, radii, n_angles, resolution, label, params=None):
        self.radii = _readonly(np.asarray(radii, dtype=float))
        self.n_angles = int(n_angles)
        self._points = None
        self.resolution = float(resolution)
        self.label = label
        self.params = dict(params or {})
        self._numerators = None
        self._denominators = None

    def __len__(self):
        return len(self.radii) * self.n_angles

    @property
    def d(self):
        return 2

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.n_angles) / self.n_angles

    @property
    def points(self):
        if self._points is None:
            check_size(len(self), MAX_POINTS, "points")
            th = self.angles
            r = self.radii[:, None]
            P = np.stack([(r * np.cos(th)).ravel(), (r * np.sin(th)).ravel()], axis=1)
            P.setflags(write=False)
            self._points = P
        return self._points

    def bounding_box(self):
        rmax = float(self.radii.max())
        return np.array([-rmax, -rmax]), np.array([rmax, rmax])

    def diameter(self):
        return 2.0 * float(self.radii.max()) * math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Grids and lattice constructions
# ---------------------------------------------------------------------------

def build_grid(n, d=2):
    """Cell centers ``(2 i + 1) / (2 n)`` of the uniform n^d grid on [0, 1]^d."""
    check_scalar(n, "n", min_val=1, integer=True)
    check_scalar(d, "d", min_val=1, integer=True)
    check_size(n ** d)
    idx = np.indices((n,) * d).reshape(d, -1).T
    return PointSet(None, 1.0 / (2 * n), "grid", {"n": n, "d": d},
                    numerators=2 * idx + 1, denominators=(2 * n,) * d)


def build_valtr(n, d=2, cap=None):
    """The lattice ``(i_1/n, ..., i_{d-1}/n, i_d/n^2)``, ``0 <= i_j < n``, ``1 <= i_d <= n^2``.

    The set has exactly ``n**(d + 1)`` points, stored as exact rationals.
    """
    check_scalar(n, "n", min_val=2, integer=True)
    check_scalar(d, "d", min_val=2, integer=True)
    check_size(n ** (d + 1), cap)
    idx = np.indices((n,) * (d - 1) + (n * n,)).reshape(d, -1).T
    idx[:, -1] += 1
    return PointSet(None, 1.0 / (n * n), "valtr", {"n": n, "d": d},
                    numerators=idx, denominators=(n,) * (d - 1) + (n * n,))


class ParaboloidFamily:
    """Translates ``H + p`` of ``H = {(t, |t|^2)}`` for each ``p`` in a point set."""

    def __init__(self, translations):
        if not isinstance(translations, PointSet):
            raise TypeError("translations must be a PointSet")
        self.translations = translations
        self.d = translations.d

    def __len__(self):
        return len(self.translations)

    def contains(self, q, index):
        """Exact membership ``q in H + p_index`` for rational or float ``q``."""
        p = self.translations.exact_points()[index] if self.translations.is_exact \
            else [Fraction(float(c)) for c in self.translations.points[index]]
        q = [Fraction(c) for c in q]
        return q[-1] - p[-1] == sum((a - b) ** 2 for a, b in zip(q[:-1], p[:-1]))


def build_paraboloid_family(P):
    """One translate of the model paraboloid through each point of ``P``."""
    return ParaboloidFamily(P)


def _iroot_floor(value, k):
    """Largest integer ``x >= 0`` with ``x**k <= value``."""
    x = int(round(value ** (1.0 / k)))
    while x ** k > value:
        x -= 1
    while (x + 1) ** k <= value:
        x += 1
    return x


def lattice_extent(q, d):
    """Integer bounds ``(floor(q^(d/(d+1))), floor(q^(2d/(d+1))))``, exactly."""
    return _iroot_floor(q ** d, d + 1), _iroot_floor(q ** (2 * d), d + 1)


def build_lattice_E(q, s, d=2, aligned=False, cap=None):
    """Centers of one stage of the lattice construction, resolution ``q^(-d/s)``.

    The centers are ``q^-1 x`` for integer ``x`` with
    ``0 <= x_j <= q^(d/(d+1))`` (j < d) and ``0 <= x_d <= q^(2d/(d+1))``.

    With ``aligned=True`` the lattice is instead ``(i / M, ..., j / M^2)``
    with ``0 <= i <= M``, ``0 <= j <= M^2`` and ``M = floor(q^(d/(d+1)))``:
    vertical spacing is the square of horizontal spacing, so unit
    paraboloid caps pass exactly through lattice points.
    """
    check_scalar(q, "q", min_val=2, integer=True)
    check_scalar(s, "s", min_val=0, max_val=d, include_min=False, include_max=False)
    check_scalar(d, "d", min_val=2, integer=True)
    M, K = lattice_extent(q, d)
    if aligned:
        K = M * M
    check_size((M + 1) ** (d - 1) * (K + 1), cap)
    idx = np.indices((M + 1,) * (d - 1) + (K + 1,)).reshape(d, -1).T
    dens = (M,) * (d - 1) + (M * M,) if aligned else (q,) * d
    params = {"q": q, "s": s, "d": d, "aligned": aligned}
    return PointSet(None, float(q) ** (-d / s), "lattice_E_aligned" if aligned else "lattice_E",
                    params, numerators=idx, denominators=dens)


def build_q_sequence(stages, cap=INT64_MAX):
    """``q_1 = 2``, ``q_{i+1} = q_i ** i``, truncated once a term exceeds ``cap``."""
    check_scalar(stages, "stages", min_val=1, integer=True)
    seq = [2]
    for i in range(1, stages):
        nxt = seq[-1] ** i
        if nxt > cap:
            warnings.warn(f"q sequence truncated after {len(seq)} terms: q_{i + 1} exceeds {cap}",
                          OverflowGuardWarning, stacklevel=2)
            break
        seq.append(nxt)
    return seq


# ---------------------------------------------------------------------------
# Cantor sets and the radial construction
# ---------------------------------------------------------------------------

def cantor_ratio(alpha):
    """Contraction ratio of the two-map IFS whose attractor has dimension alpha."""
    return 2.0 ** (-1.0 / alpha)


def cantor_intervals(alpha, depth, a=0.0, b=1.0):
    """Left endpoints and common length of the ``2**depth`` surviving intervals.

    The IFS is ``x -> a + r (x - a)`` and ``x -> b - r (b - x)`` with
    ``r = 2**(-1/alpha)``.
    """
    check_scalar(alpha, "alpha", min_val=0, max_val=1, include_min=False, include_max=False)
    check_scalar(depth, "depth", min_val=0, integer=True)
    check_size(2 ** depth)
    r = cantor_ratio(alpha)
    lefts = np.array([0.0])
    length = 1.0
    for _ in range(depth):
        new = length * r
        lefts = np.concatenate([lefts, lefts + (length - new)])
        length = new
    lefts = np.sort(lefts)
    return a + (b - a) * lefts, (b - a) * length


def build_cantor(alpha, depth, a=0.0, b=1.0):
    """Centers of the depth-``depth`` Cantor intervals; resolution = interval length."""
    check_scalar(depth, "depth", min_val=1, integer=True)
    lefts, length = cantor_intervals(alpha, depth, a, b)
    params = {"alpha": alpha, "depth": depth, "ratio": cantor_ratio(alpha), "interval": [a, b]}
    return IntervalSet(lefts + 0.5 * length, np.full(len(lefts), length), "cantor", params)


def build_F(alpha, depth):
    """Union of a Cantor set on [1/2, 1] and its image under ``x -> 1/x``.

    The Cantor part lives on [1/2, 1] and the reciprocal part on [1, 2], so
    the union is closed under inversion at every stage.
    """
    C = build_cantor(alpha, depth, 0.5, 1.0)
    lo, hi = C.lefts, C.rights
    inv_lo, inv_hi = 1.0 / hi, 1.0 / lo
    centers = np.concatenate([C.points[:, 0], 0.5 * (inv_lo + inv_hi)])
    lengths = np.concatenate([C.lengths, inv_hi - inv_lo])
    params = {"alpha": alpha, "depth": depth, "ratio": cantor_ratio(alpha)}
    return IntervalSet(centers, lengths, "F", params)


def build_M2(alpha, depth, n_angles):
    """Radial set ``{r w : r in F, w in S^1}`` with its product measure.

    Returns ``(PolarPointSet, PolarProductMeasure)``. Each radial interval
    carries mass proportional to ``length**alpha`` (the alpha-dimensional
    Hausdorff measure of its piece of F, up to a common constant); angles
    are uniform.
    """
    from .measures import PolarProductMeasure

    check_scalar(n_angles, "n_angles", min_val=8, integer=True)
    F = build_F(alpha, depth)
    w = F.lengths ** alpha
    w = w / w.sum()
    resolution = max(F.resolution, 2.0 * float(F.points.max()) * np.pi / n_angles)
    params = {"alpha": alpha, "depth": depth, "n_angles": n_angles}
    P = PolarPointSet(F.points[:, 0], n_angles, resolution, "M2", params)
    return P, PolarProductMeasure(P, w)
