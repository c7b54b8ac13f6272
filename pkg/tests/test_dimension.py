import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.distance import cdist

from fractal_rvt.dimension import (ConfigSet, box_count, box_count_table, build_config_set,
                                   default_tolerance, dyadic_scales, minkowski_dim_estimate,
                                   sharpness_experiment, stage_dimension, verify_rvt_bound)
from fractal_rvt.fractal_sets import PointSet, build_cantor, build_grid, build_lattice_E
from fractal_rvt.geometry import ConvexBody, make_phi_body_gauge, make_phi_dot, make_phi_euclid

EUCLID = make_phi_euclid(2)
GAUGE = make_phi_body_gauge(ConvexBody(2))
LOG23 = math.log(2) / math.log(3)


def _cells_oracle(X, res, delta):
    """Cells [k delta, (k+1) delta) meeting some open cube (x - res, x + res), by enumeration."""
    cells = set()
    for x in X:
        ranges = []
        for c in x:
            lo = math.floor((c - res) / delta) - 1
            hi = math.floor((c + res) / delta) + 1
            ranges.append([k for k in range(lo, hi + 1) if (k + 1) * delta > c - res and k * delta < c + res])
        cells.update(itertools.product(*ranges))
    return len(cells)


# -- box counts -----------------------------------------------------------------

def test_segment_box_count():
    seg = PointSet(None, 1 / 64, "segment", numerators=[[k, 0] for k in range(65)], denominators=(64, 1))
    assert box_count(seg, 1 / 8) == 9
    # the open squares about y = 0 also reach the row of cells below the axis
    assert box_count(seg, 1 / 8, neighborhood=True) == 10 * 2
    assert box_count(seg, 1 / 128, neighborhood=True) == _cells_oracle(seg.points, 1 / 64, 1 / 128)


def test_single_point():
    P = PointSet([[0.3, 0.6]], 0.0)
    for k in range(1, 12):
        assert box_count(P, 2.0 ** -k) == 1


def test_full_grid():
    assert box_count(build_grid(64), 1 / 8) == 64
    assert box_count(build_grid(64), 1 / 64) == 4096


def test_filled_square_dimension():
    rep = minkowski_dim_estimate(build_grid(256), dyadic_scales(2.0 ** -8, 0.5))
    assert rep.exponent == pytest.approx(2.0, abs=0.1)


def test_cantor_dimension():
    C = build_cantor(LOG23, 8)
    # triadic scales are exact for the middle-thirds construction
    rep = minkowski_dim_estimate(C, [3.0 ** -k for k in range(1, 9)])
    assert rep.exponent == pytest.approx(LOG23, abs=1e-9)
    rep = minkowski_dim_estimate(C, dyadic_scales(2.0 ** -11, 0.5))
    assert rep.exponent == pytest.approx(LOG23, abs=0.05)


def test_cantor_counts_match_interval_oracle():
    C = build_cantor(LOG23, 6)
    for k in range(1, 8):
        delta = 2.0 ** -k
        cells = set()
        for a, b in zip(C.lefts, C.rights):
            # open interval (a, b) meets [j delta, (j+1) delta)
            cells.update(range(int(math.floor(a / delta)), int(math.ceil(b / delta))))
        assert box_count(C, delta, neighborhood=True) == len(cells)


def test_lattice_stage_dimension():
    E = build_lattice_E(64, 1.5)
    assert stage_dimension(E) == pytest.approx(1.5, abs=0.15)


def test_box_count_below_resolution_matches_oracle():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 1, (60, 2))
    P = PointSet(X, 0.03)
    for delta in (0.02, 0.01, 0.007):
        assert box_count(P, delta, neighborhood=True) == _cells_oracle(X, 0.03, delta)


def test_box_count_table_and_errors():
    T = box_count_table(build_grid(16), [1 / 4, 1 / 2, 1 / 8])
    np.testing.assert_array_equal(T.deltas, [1 / 2, 1 / 4, 1 / 8])
    np.testing.assert_array_equal(T.counts, [4, 16, 64])
    assert T.to_csv().splitlines()[0] == "delta,count"
    with pytest.raises(ValueError):
        box_count(build_grid(4), 0.0)
    with pytest.raises(ValueError):
        minkowski_dim_estimate(build_grid(4), [0.5, 0.25])
    with pytest.raises(TypeError):
        box_count(np.zeros((3, 2)), 0.1)


def test_dyadic_scales():
    np.testing.assert_array_equal(dyadic_scales(2.0 ** -6, 2.0 ** -2), [2.0 ** -k for k in range(2, 7)])


clouds = st.tuples(st.integers(1, 200), st.integers(2, 4), st.integers(0, 10 ** 6), st.floats(0, 0.05))


@given(clouds, st.integers(1, 7), st.booleans())
def test_dyadic_sandwich(cloud, k, nbhd):
    n, D, seed, res = cloud
    X = np.random.default_rng(seed).uniform(-1, 1, (n, D))
    P = PointSet(X, res)
    a, b = box_count(P, 2.0 ** -k, nbhd), box_count(P, 2.0 ** -(k + 1), nbhd)
    assert 1 <= a <= b <= 2 ** D * a


@given(st.integers(0, 10 ** 6), st.integers(1, 6), st.booleans())
def test_dyadic_sandwich_config_sets(seed, k, nbhd):
    X = np.random.default_rng(seed).uniform(0, 1, (60, 2))
    S = build_config_set(PointSet(X, 0.004), EUCLID, 0.4, tol=0.05)
    if len(S):
        a, b = box_count(S, 2.0 ** -k, nbhd), box_count(S, 2.0 ** -(k + 1), nbhd)
        assert a <= b <= 2 ** 4 * a


def test_dyadic_sandwich_across_resolution():
    # both counting modes are consistent through the resolution scale
    P = PointSet(np.random.default_rng(3).uniform(0, 1, (300, 2)), 0.01)
    for nbhd in (False, True):
        counts = [box_count(P, 2.0 ** -k, nbhd) for k in range(1, 12)]
        assert all(a <= b <= 4 * a for a, b in zip(counts, counts[1:]))


@given(st.integers(0, 10 ** 6), st.floats(0.001, 1.0))
def test_box_count_permutation_invariant(seed, delta):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (100, 2))
    perm = rng.permutation(100)
    assert box_count(PointSet(X, 0.01), delta) == box_count(PointSet(X[perm], 0.01), delta)


def test_box_count_permutation_invariant_exact():
    G = build_grid(32)
    perm = np.random.default_rng(1).permutation(len(G))
    for k in range(1, 8):
        assert box_count(G, 2.0 ** -k) == box_count(G.subset(perm), 2.0 ** -k)


# -- configuration sets ---------------------------------------------------------

def test_config_two_points():
    E = PointSet([[0.0, 0.0], [1.0, 0.0]], 0.0)
    S = build_config_set(E, EUCLID, 1.0, tol=1e-12)
    assert sorted(map(tuple, S.pairs())) == [(0, 1), (1, 0)]
    assert len(build_config_set(E, EUCLID, 2.5, tol=0.1)) == 0


def test_config_grid32_matches_brute():
    G = build_grid(32)
    tol = default_tolerance(G, EUCLID)
    assert tol == pytest.approx(2 / 64)
    S = build_config_set(G, EUCLID, 0.5)
    D = cdist(G.points, G.points)
    assert len(S) == int(np.sum(np.abs(D - 0.5) <= tol))
    assert S.tol == tol and S.dimension == 4


@pytest.mark.parametrize("phi,t", [(EUCLID, 0.3), (GAUGE, 0.5), (make_phi_dot(2), 0.2)])
def test_config_recheck_and_symmetry(phi, t):
    X = np.random.default_rng(5).uniform(0, 1, (400, 2))
    S = build_config_set(PointSet(X, 0.005), phi, t, tol=0.01)
    assert len(S) > 0 and S.recheck(phi)
    pairs = set(map(tuple, S.pairs()))
    assert pairs == {(j, i) for i, j in pairs}


def test_config_set_as_cloud():
    G = build_grid(8)
    S = build_config_set(G, EUCLID, 0.5, tol=1e-9)
    C = S.as_point_set()
    assert C.d == 4 and len(C) == len(S) and C.is_exact
    assert box_count(S, 1 / 16) == box_count(C, 1 / 16)
    assert isinstance(S, ConfigSet)


# -- dimension inequality -------------------------------------------------------

def test_rvt_grid_is_three_dimensional():
    rep = verify_rvt_bound(build_grid(128), EUCLID, 0.5, s=2.0)
    assert rep["reference"] == 3.0
    assert rep["estimate"] == pytest.approx(3.0, abs=0.2)
    assert rep["passed"]


def test_rvt_two_points():
    E = PointSet([[0.0, 0.0], [0.5, 0.0]], 2.0 ** -10)
    rep = verify_rvt_bound(E, EUCLID, 0.5, s=0.0)
    assert rep["pairs"] == 2
    assert rep["estimate"] == pytest.approx(0.0, abs=0.2)


def test_rvt_lattice_s18():
    E = build_lattice_E(64, 1.8)
    for phi in (EUCLID, GAUGE):
        rep = verify_rvt_bound(E, phi, 0.5)
        assert rep["estimate"] <= 2 * 1.8 - 1 + 0.2
        assert rep["hypothesis_s_gt_(d+1)/2"]


def test_rvt_slope_method_runs():
    rep = verify_rvt_bound(build_grid(32), EUCLID, 0.5, s=2.0, method="slope",
                           delta_list=dyadic_scales(2.0 ** -5, 2.0 ** -2))
    assert len(rep["counts"]) == 4 and rep["estimate"] > 2.5
    with pytest.raises(ValueError):
        verify_rvt_bound(build_grid(8), EUCLID, 0.5, s=2.0, method="other")


# -- sharpness ------------------------------------------------------------------

def test_sharpness_reference_values():
    rep = sharpness_experiment([8, 16], s=1.2)
    assert rep["claimed_lower_bound"] == pytest.approx(1.6)
    assert rep["rvt_bound"] == pytest.approx(1.4)
    assert rep["count_exponent"] == pytest.approx(8 / 3)
    for row in rep["rows"]:
        assert row["box_count"] >= 1 and row["c"] == pytest.approx(row["box_count"] / row["q"] ** (8 / 3))


def test_sharpness_boundary_case():
    rep = sharpness_experiment([8, 16], s=1.5)
    assert rep["claimed_lower_bound"] == pytest.approx(2.0)
    assert rep["rvt_bound"] == pytest.approx(2.0)


def test_sharpness_pairs_lie_on_unit_sphere():
    E = build_lattice_E(16, 1.2, aligned=True)
    S = build_config_set(E, GAUGE, 1.0, tol=1e-9)
    assert len(S) > 0 and S.recheck(GAUGE)
    # exact check: pairs differ by (a / M, b / M^2) with b / M^2 = 1 - (a / M)^2
    N, (M, M2) = E.numerators, E.denominators
    dx = N[S.I, 0] - N[S.J, 0]
    dz = np.abs(N[S.I, 1] - N[S.J, 1])
    assert np.all(dz * M * M == (M * M - dx * dx) * M2)


def test_sharpness_needs_two_q():
    with pytest.raises(ValueError):
        sharpness_experiment([16])
