import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kpzlattice.errors import CapacityError, DomainError
from kpzlattice.noise import rademacher
from kpzlattice.walk_kernel import (
    PowerSeries,
    brute_intersections,
    build_kernel,
    constants_c1_c2,
    gf_identity_report,
    lazy_walk_counts,
    mu_of,
    sample_intersections,
    series_E,
    series_O_SO,
    series_P,
    series_R,
)


@pytest.fixture(scope="module")
def kernel():
    return build_kernel(300)


def test_small_values(kernel):
    assert kernel.p(0, 0) == 1
    assert kernel.p(1, 1) == kernel.p(-1, 1) == 0.5
    assert kernel.p(0, 2) == 0.5
    assert kernel.p(2, 2) == kernel.p(-2, 2) == 0.25
    assert kernel.delta(1, 2) == -0.25
    assert kernel.delta(-2, 1) == 0.5 and kernel.delta(2, 1) == -0.5


def test_rows(kernel):
    for t in range(0, 301, 37):
        p = kernel.p_row(t)
        x = np.arange(-(t + 1), t + 2)
        assert abs(p.sum() - 1) < 1e-14
        assert np.all(p[(x + t) % 2 == 1] == 0)
        assert p[0] == 0 and p[-1] == 0
        d = kernel.delta_row(t)
        assert abs(d.sum()) < 1e-14
        np.testing.assert_allclose(d, -d[::-1], atol=0)


def test_outside_support_is_zero(kernel):
    assert kernel.p(10, 3) == 0
    assert kernel.delta(-400, 5) == 0


def test_delta_l2_decay(kernel):
    t = np.arange(1, 301)
    s = np.array([np.sum(kernel.delta_row(k) ** 2) for k in t])
    scaled = s * t**1.5
    assert scaled.max() < 2 / math.sqrt(math.pi) + 1e-3
    # the decay is genuinely t^{-3/2}: the scaled sum settles rather than drifting
    assert abs(scaled[-1] / scaled[150] - 1) < 0.01


def test_pascal_against_binomials(kernel):
    t = 40
    x = np.arange(-t, t + 1, 2)
    exact = [math.comb(t, (t + k) // 2) / 2**t for k in x]
    np.testing.assert_allclose(kernel.p(x, t), exact, rtol=1e-13)


def test_capacity():
    with pytest.raises(CapacityError):
        build_kernel(10_000, budget=2**20)


def test_constants_horizon_one():
    kc = constants_c1_c2(1)
    # the t = 0 row contributes delta(+-1, 0) = -+1
    assert kc.C1 == pytest.approx(2 + 1 / 8, abs=1e-15)
    t1_only = sum(float(d) ** 4 for d in build_kernel(1).delta_row(1))
    assert t1_only == 1 / 8


def test_constants_consistency():
    kc = constants_c1_c2(200)
    k = build_kernel(200)
    rows = [k.delta_row(t) for t in range(201)]
    c1 = sum(float(np.sum(r**4)) for r in rows)
    sq = sum(float(np.sum(r**2)) for r in rows)
    assert kc.C1 == pytest.approx(c1, rel=1e-13)
    assert kc.sum_sq == pytest.approx(sq, rel=1e-13)
    assert kc.C2 == pytest.approx(sq**2 - c1, rel=1e-13)


def test_tail_bound_covers_doubling():
    a, b = constants_c1_c2(500), constants_c1_c2(1000)
    assert b.C2 - a.C2 <= a.tail_C2
    assert b.C1 - a.C1 <= a.tail_C1 + 1e-15


def test_series_first_terms():
    P = series_P(10, exact=True)
    assert P[0] == 0 and P[1] == Fraction(1, 2) and P[2] == Fraction(1, 8)
    O, SO = series_O_SO(10, exact=True)
    assert O[1] == Fraction(1, 2) and O[2] == Fraction(5, 16)
    assert SO[1] == Fraction(1, 2) and SO[2] == Fraction(1, 16)
    E = series_E(2.0, 5)
    assert E[0] == 1 and E[1] == pytest.approx(1.5)
    assert all(c == pytest.approx(1.0, abs=1e-14) for c in series_E(1.0, 30).coeffs)


def test_exact_identities():
    n = 20
    O, SO = series_O_SO(n, exact=True)
    z = PowerSeries([Fraction(0), Fraction(1)])
    assert (SO - (z * z * O * Fraction(1, 16) + z * Fraction(1, 2))).truncate(n).coeffs == [0] * (n + 1)
    assert (O - (SO * O + 1)).truncate(n).coeffs == [0] * (n + 1)
    P = series_P(n, exact=True)
    assert (P - ((SO - z * Fraction(1, 2)) * 2 + z * Fraction(1, 2))).truncate(n).coeffs == [0] * (n + 1)
    for mu in (Fraction(1), Fraction(11, 10), Fraction(2)):
        E = series_E(mu, n, exact=True)
        lhs = E * (1 - P * mu)
        assert (lhs - (series_R(n, exact=True) + 1)).truncate(n).coeffs == [0] * (n + 1)


def test_dp_matches_closed_forms():
    dp = lazy_walk_counts(15)
    O, SO = series_O_SO(15, exact=True)
    P = series_P(15, exact=True)
    assert dp["O"] == O.coeffs
    assert dp["SO"] == SO.coeffs
    assert dp["first_return"] == P.coeffs


def test_brute_force():
    assert brute_intersections(0, 3.0) == (1.0, 0.0, 0.0)
    assert brute_intersections(1, 2.0)[0] == pytest.approx(1.5)
    for mu in (1.1, 1.5):
        assert series_E(mu, 12)[12] == pytest.approx(brute_intersections(12, mu)[0], abs=1e-12)
    with pytest.raises(CapacityError):
        brute_intersections(20, 1.1)


def test_intersection_second_moment_grows_linearly():
    ratios = [brute_intersections(t, 1.0)[2] / t for t in (8, 14)]
    for t in (64, 256, 1024):
        n = sample_intersections(t, 4000, seed=t)
        ratios.append(np.mean(n.astype(float) ** 2) / t)
    # E[N_t^2] / t tends to 2 for the lazy walk
    assert max(ratios) < 2.2


def test_series_E_rejects_small_mu():
    with pytest.raises(DomainError):
        series_E(0.5, 4)


@given(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=7), min_size=1, max_size=8),
       st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=7), min_size=1, max_size=8))
def test_series_arithmetic_exact(a, b):
    A, B = PowerSeries(a), PowerSeries(b)
    n = min(len(a), len(b)) - 1
    prod = (A * B).truncate(n)
    for k in range(n + 1):
        assert prod[k] == sum(a[i] * b[k - i] for i in range(k + 1))
    if a[0] != 0:
        one = (A * A.reciprocal()).truncate(len(a) - 1)
        assert one.coeffs == [1] + [0] * (len(a) - 1)


def test_mu_of():
    assert mu_of(rademacher(), 0.0, 16) == 1.0
    assert mu_of(rademacher(), 1.0, 16) == pytest.approx(math.cosh(1) / math.cosh(0.5) ** 2, rel=1e-14)
    gaps = [mu_of(rademacher(), 1.0, N) - 1 for N in (16, 64, 256, 1024)]
    for g0, g1 in zip(gaps, gaps[1:]):
        assert g1 / g0 == pytest.approx(0.5, rel=0.15)


def test_report_passes():
    rep = gf_identity_report()
    assert rep["pass"], rep
