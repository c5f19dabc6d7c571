import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kpzlattice.errors import DomainError, UnsupportedMomentError
from kpzlattice.lattice import parity_mask
from kpzlattice.noise import (
    exact_moment,
    law_from_spec,
    log_mgf,
    mgf,
    noise_values,
    rademacher,
    sample_sheet,
    truncated_gaussian,
    two_point,
    uniform_centered,
    zero_law,
)

LAWS = [rademacher(), uniform_centered(), truncated_gaussian(), two_point(2.0, 0.2), uniform_centered(0.5)]


def test_rademacher_moments():
    assert exact_moment(rademacher(), 2) == 1
    assert exact_moment(rademacher(), 3) == 0


def test_uniform_fourth_moment():
    assert exact_moment(uniform_centered(math.sqrt(3)), 4) == pytest.approx(9 / 5, rel=1e-14)


@pytest.mark.parametrize("k", [0, 9, 2.0])
def test_moment_order_rejected(k):
    with pytest.raises(UnsupportedMomentError):
        exact_moment(rademacher(), k)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.family)
def test_moment_contract(law):
    mu1, mu2, _, mu4 = law.mu
    assert abs(mu1) < 1e-15
    assert mu2 > 0
    assert mu4 >= mu2**2


@pytest.mark.parametrize("law", LAWS[:4], ids=lambda l: l.family)
def test_closed_moments_match_quadrature(law):
    from scipy import integrate

    if law.family == "uniform":
        h = law.params[0]
        q = integrate.quad(lambda u: u**4 / (2 * h), -h, h)[0]
        assert q == pytest.approx(exact_moment(law, 4), rel=1e-12)
    elif law.family == "truncated-gaussian":
        s, c = law.params
        dens = lambda u: math.exp(-u * u / (2 * s * s))
        z = integrate.quad(dens, -c * s, c * s)[0]
        for k in (2, 4, 6):
            q = integrate.quad(lambda u: u**k * dens(u), -c * s, c * s)[0] / z
            assert q == pytest.approx(exact_moment(law, k), rel=1e-9)


def test_rademacher_mgf():
    law = rademacher()
    assert mgf(law, 0.0) == 1.0
    assert mgf(law, 1.0) == pytest.approx(1.5430806348152437, rel=1e-15)


def test_uniform_mgf_limit():
    law = uniform_centered(2.0)
    assert mgf(law, 0.0) == 1.0
    assert mgf(law, 1e-10) == pytest.approx(1.0, abs=1e-15)
    assert mgf(law, 0.3) == pytest.approx(math.sinh(0.6) / 0.6, rel=1e-14)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.family)
def test_mgf_taylor(law):
    theta = 1e-2
    series = sum(theta**k * exact_moment(law, k) / math.factorial(k) for k in range(1, 9)) + 1
    bound = (theta * law.support_bound) ** 9
    assert abs(mgf(law, theta) - series) <= bound + 1e-15


@given(st.floats(-5, 5))
def test_log_mgf_consistent(theta):
    for law in LAWS:
        assert log_mgf(law, theta) == pytest.approx(math.log(mgf(law, theta)), abs=1e-12)


def test_mgf_domain():
    with pytest.raises(DomainError):
        mgf(rademacher(), 1e4)
    with pytest.raises(DomainError):
        mgf(uniform_centered(), float("nan"))


def test_sheet_determinism_and_layout():
    a = sample_sheet(rademacher(), 7, 5, 4)
    b = sample_sheet(rademacher(), 7, 5, 4)
    np.testing.assert_array_equal(a.values, b.values)
    even = parity_mask(5, 4)
    assert np.all(a.values[0][even[0]] == 0)
    assert np.all(np.isnan(a.values[~even]))
    assert set(np.unique(a.values[1:][even[1:]])) == {-1.0, 1.0}
    with pytest.raises(ValueError):
        a.at(0, 1)


@given(st.integers(0, 2**63), st.integers(1, 6), st.integers(1, 6))
def test_sheet_invariant_under_enlargement(seed, xmax, tmax):
    small = sample_sheet(uniform_centered(), seed, xmax, tmax)
    big = sample_sheet(uniform_centered(), seed, xmax + 3, tmax + 2)
    np.testing.assert_array_equal(small.values, big.values[: tmax + 1, 3 : 3 + 2 * xmax + 1])


def test_batch_seeds_match_scalar():
    seeds = np.array([1, 2, 3], dtype=np.uint64)
    batch = sample_sheet(two_point(1.0, 0.3), seeds, 4, 3)
    for i, s in enumerate(seeds):
        np.testing.assert_array_equal(batch.values[i], sample_sheet(two_point(1.0, 0.3), s, 4, 3).values)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.family)
def test_sample_moments(law):
    n = 10**6
    y = noise_values(law, 12345, np.arange(n), 1)
    for k in range(1, 5):
        tol = 4 * math.sqrt(exact_moment(law, 2 * k)) / math.sqrt(n)
        assert abs(np.mean(y**k) - exact_moment(law, k)) <= tol


def test_rademacher_mean_and_mgf_sample():
    y = noise_values(rademacher(), 99, np.arange(10**6), 3)
    assert abs(y.mean()) < 4e-3
    assert abs(np.mean(np.exp(y)) - math.cosh(1)) < 3 * math.sinh(1) / 1e3


def test_zero_law():
    law = zero_law()
    assert law.mu == (0.0, 0.0, 0.0, 0.0)
    vals = sample_sheet(law, 1, 3, 3).values
    assert np.all(vals[parity_mask(3, 3)] == 0)


def test_law_from_spec_roundtrip():
    for law in LAWS:
        assert law_from_spec(law.to_spec()) == law
    assert law_from_spec("rademacher") == rademacher()
    with pytest.raises(ValueError):
        law_from_spec({"family": "cauchy"})
    with pytest.raises(ValueError):
        law_from_spec({"family": "uniform", "halfwidth": 1.0, "extra": 2})
    with pytest.raises(ValueError):
        uniform_centered(-1.0)
