from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractal_rvt.fractal_sets import PointSet, build_paraboloid_family, build_valtr
from fractal_rvt.incidence import count_incidences, incidence_scaling


def fraction_oracle(P, L):
    """Definition-level double loop in exact rationals."""
    pts = P.exact_points()
    trs = L.translations.exact_points()
    return sum(q[-1] - p[-1] == sum((a - b) ** 2 for a, b in zip(q[:-1], p[:-1]))
               for q in pts for p in trs)


def test_n2_matches_oracle():
    P = build_valtr(2, 2)
    L = build_paraboloid_family(P)
    assert len(P) * len(L) == 64
    expected = fraction_oracle(P, L)
    assert count_incidences(P, L) == expected == 14
    assert count_incidences(P, L, method="brute") == expected


def test_single_point_single_translate():
    P = PointSet(None, 1.0, numerators=[[1, 3]], denominators=(2, 5))
    assert count_incidences(P, build_paraboloid_family(P)) == 1


def test_translates_far_above():
    P = build_valtr(3, 2)
    high = PointSet(None, 1.0, numerators=P.numerators + np.array([0, 100]), denominators=P.denominators)
    assert count_incidences(P, build_paraboloid_family(high)) == 0


@pytest.mark.parametrize("n,d", [(n, d) for d in (2, 3) for n in range(2, 9)])
def test_fast_equals_brute(n, d):
    P = build_valtr(n, d)
    L = build_paraboloid_family(P)
    fast = count_incidences(P, L, method="fast")
    brute = count_incidences(P, L, method="brute")
    assert int(fast) == int(brute)
    np.testing.assert_array_equal(fast.per_translate, brute.per_translate)


def test_fast_equals_fraction_oracle_small():
    for n, d in ((3, 2), (2, 3), (4, 2)):
        P = build_valtr(n, d)
        L = build_paraboloid_family(P)
        assert count_incidences(P, L) == fraction_oracle(P, L)


@st.composite
def rational_sets(draw):
    d = draw(st.sampled_from([2, 3]))
    dens = tuple(draw(st.integers(1, 8)) for _ in range(d))
    k = draw(st.integers(1, 40))
    rows = draw(st.lists(st.tuples(*[st.integers(-8, 8) for _ in range(d)]), min_size=1, max_size=k,
                         unique=True))
    trs = draw(st.lists(st.tuples(*[st.integers(-8, 8) for _ in range(d)]), min_size=1, max_size=k))
    tdens = tuple(draw(st.integers(1, 8)) for _ in range(d))
    return (PointSet(None, 1.0, numerators=rows, denominators=dens),
            PointSet(None, 1.0, numerators=trs, denominators=tdens))


@given(rational_sets())
def test_fast_equals_brute_property(sets):
    P, T = sets
    L = build_paraboloid_family(T)
    fast = count_incidences(P, L, method="fast")
    assert int(fast) == int(count_incidences(P, L, method="brute")) == fraction_oracle(P, L)


@given(st.integers(2, 8), st.sampled_from([2, 3]))
def test_fast_equals_brute_valtr_property(n, d):
    P = build_valtr(n, d)
    L = build_paraboloid_family(P)
    assert int(count_incidences(P, L, method="fast")) == int(count_incidences(P, L, method="brute"))


@given(st.integers(2, 6), st.sampled_from([2, 3]), st.tuples(st.integers(-9, 9), st.integers(-9, 9),
                                                              st.integers(-9, 9)), st.integers(1, 7))
def test_joint_translation_invariance(n, d, shift, den):
    P = build_valtr(n, d)
    base = count_incidences(P, build_paraboloid_family(P))
    v = [Fraction(shift[k], den) for k in range(d)]
    pts = [tuple(c + s for c, s in zip(row, v)) for row in P.exact_points()]
    dens = [int(np.lcm.reduce([x[k].denominator for x in pts])) for k in range(d)]
    num = [[int(x[k] * dens[k]) for k in range(d)] for x in pts]
    Q = PointSet(None, P.resolution, numerators=num, denominators=dens)
    assert count_incidences(Q, build_paraboloid_family(Q)) == base


@given(st.integers(2, 6), st.sampled_from([2, 3]), st.integers(0, 10 ** 6))
def test_relabel_invariance(n, d, seed):
    P = build_valtr(n, d)
    base = count_incidences(P, build_paraboloid_family(P))
    rng = np.random.default_rng(seed)
    Pp = P.subset(rng.permutation(len(P)))
    Tp = P.subset(rng.permutation(len(P)))
    assert count_incidences(Pp, build_paraboloid_family(Tp)) == base


def test_scaling_d2():
    rep = incidence_scaling([8, 16, 32, 64], d=2)
    assert rep.exponent == pytest.approx(4 / 3, abs=0.1)
    for row in rep.meta["rows"]:
        assert row["interior_translates"] > 0
        assert row["expected_per_translate"] / 2 <= row["interior_mean"] <= 2 * row["expected_per_translate"]
    assert np.isnan(rep.meta["rows"][0]["slope_so_far"])


def test_scaling_d3():
    rep = incidence_scaling([4, 8, 16], d=3)
    assert rep.exponent == pytest.approx(1.5, abs=0.15)
    for row in rep.meta["rows"]:
        assert row["expected_per_translate"] / 2 <= row["interior_mean"] <= 2 * row["expected_per_translate"]


def test_interior_translates_hit_every_column():
    # an interior translate meets each of the n^(d-1) columns exactly once
    n, d = 6, 2
    P = build_valtr(n, d)
    res = count_incidences(P, build_paraboloid_family(P))
    np.testing.assert_array_equal(res.per_translate[res.interior], n ** (d - 1))


def test_errors():
    P = build_valtr(2, 2)
    with pytest.raises(ValueError):
        count_incidences(P, build_paraboloid_family(P), method="other")
    with pytest.raises(ValueError):
        count_incidences(PointSet([[0.1, 0.2]], 0.1), build_paraboloid_family(P))
    with pytest.raises(ValueError):
        count_incidences(build_valtr(2, 3), build_paraboloid_family(P))
    with pytest.raises(ValueError):
        incidence_scaling([4, 8])
