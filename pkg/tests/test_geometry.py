import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from fractal_rvt.exceptions import SingularLocusError
from fractal_rvt.geometry import (ConvexBody, PhiFamily, check_fibration, estimate_lipschitz, gauge,
                                  make_phi_body_gauge, make_phi_curve_family, make_phi_dot,
                                  make_phi_euclid, rotational_curvature_det)

BODY = ConvexBody(2)
RNG = np.random.default_rng(12345)


def random_pairs(n, d, rng=RNG, min_gap=0.2):
    X = rng.uniform(-1, 1, (n, d))
    Y = rng.uniform(-1, 1, (n, d))
    keep = np.linalg.norm(X - Y, axis=1) > min_gap
    return X[keep], Y[keep]


# -- examples -----------------------------------------------------------------

def test_euclid_examples():
    phi = make_phi_euclid(2)
    assert phi.value([0, 0], [3, 4])[0] == 5.0
    np.testing.assert_allclose(phi.grad_x([1, 0], [0, 0])[0], [1, 0])
    H = phi.mixed_hessian([1.0, 0.0], [0.0, 0.0])[0]
    np.testing.assert_allclose(H, phi.fd_mixed_hessian([1.0, 0.0], [0.0, 0.0])[0], atol=1e-6)


def test_euclid_singular_on_diagonal():
    phi = make_phi_euclid(2)
    with pytest.raises(SingularLocusError):
        phi.grad_x([0.5, 0.5], [0.5, 0.5])
    with pytest.raises(SingularLocusError):
        phi.mixed_hessian([0.5, 0.5], [0.5, 0.5])
    # the value itself is defined (zero) and is used for diagonal pairs
    assert phi.value([0.5, 0.5], [0.5, 0.5])[0] == 0.0


def test_dot_examples():
    phi = make_phi_dot(2)
    assert phi.value([1, 2], [3, 4])[0] == 11.0
    x, y = np.array([0.3, -0.7]), np.array([1.1, 0.4])
    np.testing.assert_array_equal(phi.grad_x(x, y)[0], y)
    np.testing.assert_array_equal(phi.grad_y(x, y)[0], x)
    np.testing.assert_array_equal(phi.mixed_hessian(x, y)[0], np.eye(2))


def test_body_gauge_examples():
    phi = make_phi_body_gauge(BODY)
    assert phi.value([0.0, 1.0], [0.0, 0.0])[0] == pytest.approx(1.0, abs=1e-15)
    v = RNG.normal(size=2)
    assert gauge(BODY, 2 * v) == pytest.approx(2 * gauge(BODY, v), rel=1e-12)


def _bisection_oracle(body, v, tol=1e-13):
    # independent of the package's solver: bisect the defining inequality directly
    lo, hi = 0.0, 10.0 * max(1.0, np.abs(v).max())
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if body.defining(np.atleast_2d(v / mid))[0] <= 1.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_body_gauge_matches_bisection_oracle():
    v = np.array([0.3, 0.4])
    assert gauge(BODY, v) == pytest.approx(_bisection_oracle(BODY, v), abs=1e-10)


def test_gauge_direction_oracles_agree():
    # dense sampling of the boundary curve (r, height(r)) versus root finding
    v = np.array([1.0, 1.0]) / np.sqrt(2.0)
    r = np.linspace(0, BODY.ridge_radius, 2_000_001)
    z = BODY.height(r)
    angle_err = np.abs(np.arctan2(z, r) - np.pi / 4)
    k = np.argmin(angle_err)
    radial = np.hypot(r[k], z[k])
    assert gauge(BODY, v) == pytest.approx(1.0 / radial, abs=1e-8)
    assert gauge(BODY, v) == pytest.approx(_bisection_oracle(BODY, v), abs=1e-10)


def test_gauge_zero_and_apex():
    assert gauge(BODY, [0.0, 0.0]) == 0.0
    assert gauge(BODY, [0.0, 1.0]) == pytest.approx(1.0, abs=1e-15)
    assert gauge(ConvexBody(3), [0.0, 0.0, 1.0]) == pytest.approx(1.0, abs=1e-15)


def test_body_boundary_is_paraboloid_away_from_ridge():
    r = np.linspace(0, 1 - BODY.h, 200)
    np.testing.assert_allclose(BODY.height(r), 1 - r ** 2, atol=1e-14)
    V = np.stack([r, 1 - r ** 2], axis=1)
    np.testing.assert_allclose(BODY.gauge(V), 1.0, atol=1e-12)


@pytest.mark.parametrize("h", [0.05, 0.1, 0.3, 0.45])
def test_body_profile_concave(h):
    body = ConvexBody(2, h)
    r = np.linspace(0, body.ridge_radius, 20001)
    z = body.height(r)
    assert np.all(np.diff(z, 2) <= 1e-12)


def test_auto_and_bisection_gauge_agree():
    V = RNG.normal(size=(2000, 3))
    body = ConvexBody(3)
    np.testing.assert_allclose(body.gauge(V), body.gauge(V, method="bisection"), rtol=1e-12)


def test_gauge_bounds_contain_values():
    lo = RNG.uniform(-2, 2, (500, 2))
    hi = lo + RNG.uniform(0, 0.3, (500, 2))
    a, b = BODY.gauge_bounds(lo, hi)
    pts = lo + RNG.uniform(size=(500, 2)) * (hi - lo)
    g = BODY.gauge(pts)
    assert np.all(a <= g + 1e-12) and np.all(g <= b + 1e-12)


def test_curve_family_examples():
    phi = make_phi_curve_family(2, [[0.0, 0.0, 1.0]])
    assert phi.value([1.0, 1.0], [0.0, 0.0])[0] == 0.0
    phi3 = make_phi_curve_family(3)
    np.testing.assert_array_equal(phi3.value([0.4, 0.2, 0.7], [0.4, 0.2, 0.7]), [0.0, 0.0])
    assert phi3.m == 2


# -- rotational curvature and fibration ---------------------------------------

def test_curvature_det_symbolic_d1():
    x, y = sympy.symbols("x y")
    # bordered matrix of phi = x*y in one variable
    M = sympy.Matrix([[0, sympy.diff(x * y, x)], [-sympy.diff(x * y, y), sympy.diff(x * y, x, y)]])
    assert sympy.simplify(M.det() - x * y) == 0


@pytest.mark.parametrize("d", [2, 3])
def test_curvature_det_dot_equals_product(d):
    phi = make_phi_dot(d)
    for _ in range(50):
        x, y = RNG.normal(size=d), RNG.normal(size=d)
        assert rotational_curvature_det(phi, x, y) == pytest.approx(x @ y, abs=1e-8)


def test_curvature_det_dot_vanishes_at_zero_level():
    phi = make_phi_dot(2)
    assert rotational_curvature_det(phi, [1.0, 0.0], [0.0, 1.0]) == 0.0


def test_curvature_det_euclid_closed_form():
    phi = make_phi_euclid(2)
    r = 0.7
    # bordered matrix [[0,1,0],[1,0,0],[0,0,-1/r]] at u = (1, 0)
    assert rotational_curvature_det(phi, [r, 0.0], [0.0, 0.0]) == pytest.approx(1.0 / r, rel=1e-12)
    for _ in range(100):
        x, y = RNG.normal(size=2), RNG.normal(size=2)
        assert rotational_curvature_det(phi, x, y) * np.linalg.norm(x - y) == pytest.approx(1.0, abs=1e-6)


def test_curvature_det_euclid_singular():
    with pytest.raises(SingularLocusError):
        rotational_curvature_det(make_phi_euclid(2), [0.1, 0.2], [0.1, 0.2])


def test_curvature_det_gauge_nonzero_off_ridge():
    phi = make_phi_body_gauge(BODY)
    # difference vectors with |v'| / |v_d| well inside the paraboloid cap
    for v in ([0.2, 0.9], [-0.4, 0.6], [0.1, -1.3]):
        det = rotational_curvature_det(phi, np.array(v), np.zeros(2))
        assert abs(det) > 1e-3


def test_fibration_examples():
    assert check_fibration(make_phi_dot(2), [1, 0], [0, 1]) == (True, True)
    with pytest.raises(SingularLocusError):
        check_fibration(make_phi_euclid(2), [0.3, 0.3], [0.3, 0.3])


def test_fibration_moment_curve_gram_oracle():
    phi = make_phi_curve_family(3)
    x, y = np.array([0.7, 0.1, -0.3]), np.array([0.2, 0.5, 0.4])
    s = x[0] - y[0]
    gx = np.array([[-2 * s, 1.0, 0.0], [-3 * s ** 2, 0.0, 1.0]])
    G = gx @ gx.T
    exact = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    got = phi.grad_x(x, y)
    assert np.linalg.det(got @ got.T) == pytest.approx(exact, rel=1e-12)
    assert check_fibration(phi, x, y) == (True, True)


def _permuted(phi, perm):
    perm = np.asarray(perm)
    return PhiFamily(phi.name + "_perm", phi.d, phi.m,
                     lambda X, Y: phi.func(X, Y)[:, perm],
                     lambda X, Y: phi.grad_x_func(X, Y)[:, perm],
                     lambda X, Y: phi.grad_y_func(X, Y)[:, perm],
                     lambda X, Y: phi.mixed_hessian_func(X, Y)[:, perm])


@given(arrays(np.float64, 6, elements=st.floats(-2, 2)))
def test_fibration_invariant_under_relabeling(v):
    phi = make_phi_curve_family(3)
    x, y = v[:3], v[3:]
    assert check_fibration(phi, x, y) == check_fibration(_permuted(phi, [1, 0]), x, y)


# -- invariants: derivatives --------------------------------------------------

FAMILIES = [
    ("euclid2", make_phi_euclid(2)),
    ("euclid3", make_phi_euclid(3)),
    ("dot2", make_phi_dot(2)),
    ("dot3", make_phi_dot(3)),
    ("parabola", make_phi_curve_family(2, [[0.0, 0.0, 1.0]])),
    ("moment3", make_phi_curve_family(3)),
    ("cubic_curve", make_phi_curve_family(3, [[0.0, 1.0, 0.5], [0.0, 0.0, -1.0, 2.0]])),
]


@pytest.mark.parametrize("name,phi", FAMILIES, ids=[f[0] for f in FAMILIES])
def test_fd_gradients_match_analytic(name, phi):
    X, Y = random_pairs(150, phi.d)
    assert len(X) >= 100
    for a, b in ((phi.grad_x(X, Y), phi.fd_grad_x(X, Y)), (phi.grad_y(X, Y), phi.fd_grad_y(X, Y))):
        err = np.linalg.norm(a - b, axis=-1) / np.maximum(np.linalg.norm(a, axis=-1), 1e-300)
        assert err.max() <= 1e-6


@pytest.mark.parametrize("name,phi", FAMILIES, ids=[f[0] for f in FAMILIES])
def test_fd_mixed_hessian_matches_analytic(name, phi):
    X, Y = random_pairs(40, phi.d)
    H = phi.mixed_hessian(X, Y)
    F = phi.fd_mixed_hessian(X, Y)
    scale = np.maximum(np.abs(H).max(), 1.0)
    assert np.abs(H - F).max() / scale <= 1e-5


def test_body_gauge_fd_gradient_consistent():
    # no analytic gradient: compare central differences at two step sizes
    phi = make_phi_body_gauge(BODY)
    X, Y = random_pairs(100, 2)
    g1 = phi.grad_x(X, Y)
    g2 = phi._fd_grad(X, Y, "x")
    np.testing.assert_allclose(g1, g2, rtol=1e-6)
    assert np.all(np.abs(np.sum(g1[:, 0] * (X - Y), axis=1) - phi.values(X, Y)[:, 0]) < 1e-6)


@pytest.mark.parametrize("name,phi", [f for f in FAMILIES if f[1].symmetric] + [("gauge", make_phi_body_gauge(BODY))])
def test_symmetric_families_are_symmetric(name, phi):
    X, Y = random_pairs(200, phi.d, min_gap=0.0)
    np.testing.assert_array_equal(phi.values(X, Y), phi.values(Y, X))


def test_estimate_lipschitz():
    X = RNG.uniform(0, 1, (500, 2))
    assert estimate_lipschitz(make_phi_euclid(2), X) == pytest.approx(1.0)
    L = estimate_lipschitz(make_phi_body_gauge(BODY), X)
    assert 1.0 <= L <= BODY.lipschitz
    assert estimate_lipschitz(make_phi_body_gauge(BODY), X, use_known=True) == BODY.lipschitz


# -- invariants: gauge --------------------------------------------------------

def test_gauge_invariants_bulk():
    for d in (2, 3):
        body = ConvexBody(d)
        V = RNG.normal(size=(1000, d)) * RNG.uniform(0.01, 10, (1000, 1))
        W = RNG.normal(size=(1000, d))
        lam = RNG.uniform(0.01, 100, 1000)
        g = body.gauge(V)
        np.testing.assert_allclose(body.gauge(-V), g, atol=1e-12)
        np.testing.assert_allclose(body.gauge(lam[:, None] * V), lam * g, rtol=1e-12)
        assert np.all(body.gauge(V + W) <= body.gauge(V) + body.gauge(W) + 1e-10)


finite2 = arrays(np.float64, 2, elements=st.floats(-50, 50))


@given(finite2, finite2, st.floats(1e-3, 1e3))
def test_gauge_properties_hypothesis(x, y, lam):
    gx = gauge(BODY, x)
    assert gauge(BODY, -x) == pytest.approx(gx, abs=1e-12)
    assert gauge(BODY, lam * x) == pytest.approx(lam * gx, rel=1e-12, abs=1e-300)
    assert gauge(BODY, x) <= gauge(BODY, y) + gauge(BODY, x - y) + 1e-10
    assert (gx == 0) == bool(np.all(x == 0))


def test_gauge_norm_equivalence():
    V = RNG.normal(size=(1000, 2))
    g = BODY.gauge(V)
    lo = np.maximum(np.abs(V[:, 0]), np.abs(V[:, 1]))
    hi = (np.abs(V[:, 0]) + np.abs(V[:, 1])) / BODY.cone_scale
    assert np.all(lo <= g + 1e-12) and np.all(g <= hi + 1e-12)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        make_phi_euclid(1)
    with pytest.raises(ValueError):
        ConvexBody(2, h=0.6)
    with pytest.raises(ValueError):
        make_phi_curve_family(3, [[0, 0, 1]])
    with pytest.raises(ValueError):
        rotational_curvature_det(make_phi_curve_family(3), [0, 0, 0], [1, 1, 1])
