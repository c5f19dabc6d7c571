import math

import numpy as np
import pytest

from kpzlattice.noise import rademacher, sample_sheet, truncated_gaussian, two_point, uniform_centered, zero_law
from kpzlattice.polymer import rademacher_configurations, sheet_from_sites
from kpzlattice.renorm import (
    compute_constants,
    expected_k4,
    expected_y,
    k_from_sheet,
    window_lags,
    xi_moments,
    y_direct,
    y_field,
    y_flatness_report,
)
from kpzlattice.surface import named_rule
from kpzlattice.walk_kernel import constants_c1_c2, mgf

H = 2000


def test_quadratic_V():
    kc = constants_c1_c2(H)
    k = compute_constants(named_rule("kpz-quadratic"), rademacher(), 256, H)
    assert k.V == pytest.approx(2 / 3 * (kc.C1 + kc.C2), rel=1e-12)
    assert k.drift_cumulant_per_t == pytest.approx(k.V + 16 + 8 * (1 - 3) / 24, rel=1e-12)


def test_sqrt_V():
    law = uniform_centered(1.3)
    k = compute_constants(named_rule("kpz-sqrt"), law, 64, H)
    _, m2, _, m4 = law.mu
    assert k.V == pytest.approx(-(k.C1 * m4 + k.C2 * m2**2) / 24, rel=1e-12)
    assert k.drift_cumulant_per_t == pytest.approx(k.V + 0.5 * 8 * m2 + (m4 - 3 * m2**2) / 24 + 64, rel=1e-12)


@pytest.mark.parametrize("law", [rademacher(), truncated_gaussian(0.7), two_point(1.5, 0.3)], ids=lambda l: l.family)
def test_two_V_forms_agree(law):
    k = compute_constants(named_rule("kpz-quadratic"), law, 16, H)
    assert k.V == pytest.approx(k.V_alt, rel=1e-12)


def test_linear_constants():
    k = compute_constants(named_rule("linear"), rademacher(), 64, H)
    assert k.V == 0 and k.drift_cumulant_per_t == 0 and k.drift_logmgf_per_t is None


def test_drift_forms_close():
    rule = named_rule("kpz-sqrt")
    gaps = []
    for N in (64, 1024, 16384):
        k = compute_constants(rule, two_point(1.0, 0.4), N, H)
        gaps.append(abs(k.drift_logmgf_per_t - k.drift_cumulant_per_t) * N**0.25)
    assert max(gaps) < 2.0


def test_wick_constant():
    k = compute_constants(named_rule("kpz-quadratic"), rademacher(), 64, H, v_form="wick")
    assert k.V_used == k.V_wick == pytest.approx(2 / 3 * (3 * k.sum_sq**2 - 2 * k.C1), rel=1e-12)


def test_window_lags():
    assert window_lags(256, 0.008) == 1
    assert window_lags(16, 0.25) == 2
    with pytest.raises(ValueError):
        window_lags(64, 0.5)
    with pytest.raises(ValueError):
        window_lags(64, 0.0)


def test_zero_noise_gives_zero_fields():
    sheet = sample_sheet(zero_law(), 0, 20, 10)
    sheet = type(sheet)(rademacher(), None, 20, 10, sheet.values)
    k = k_from_sheet(sheet, 1.0, 16, 0.25)
    # xi is the constant 1/m - 1 and delta sums to zero along each lag
    assert np.nanmax(np.abs(k.values)) < 1e-15
    y = y_field(k, 2 / 3, 1.0)
    assert np.nanmax(np.abs(y.values)) < 1e-50
    rep = y_flatness_report(y)
    assert rep["sup_dev"] < 1e-50 and rep["sup_diff"] < 1e-50


def test_c_zero_gives_zero_Y():
    sheet = sample_sheet(rademacher(), 4, 20, 10)
    beta, c = named_rule("polymer", beta=1.0).constants("lse")
    y = y_field(k_from_sheet(sheet, beta, 16, 0.25), c, beta)
    assert np.nanmax(np.abs(y.values)) == 0


def test_K_definition_by_hand():
    sheet = sample_sheet(uniform_centered(), 9, 12, 6)
    N, beta = 16, 1.3
    k = k_from_sheet(sheet, beta, N, 0.25)
    th = beta * N**-0.25
    xi = lambda z, s: math.exp(th * sheet.at(z, s)) / mgf(sheet.law, th) - 1
    x, t = 1, 4
    # delta(x - z, r) is +1, +1/2, +1/4, +1/4 at z - x = 1, 2 (r=1), 1 and 3 (r=2), odd in z - x
    hand = 0.5 * (
        xi(x + 1, 4) - xi(x - 1, 4)
        + 0.5 * xi(x + 2, 3) - 0.5 * xi(x - 2, 3)
        + 0.25 * xi(x + 1, 2) - 0.25 * xi(x - 1, 2) + 0.25 * xi(x + 3, 2) - 0.25 * xi(x - 3, 2)
    )
    assert k.at(x, t) == pytest.approx(hand, rel=1e-13)


@pytest.mark.parametrize("beta", [1.0, 0.0])
def test_Y_forward_equals_direct(beta):
    sheet = sample_sheet(two_point(1.0, 0.35), np.arange(3, dtype=np.uint64), 36, 16)
    k = k_from_sheet(sheet, beta, 16, 0.25)
    y = y_field(k, -0.4, beta)
    for x in range(-15, 16, 2):
        for t in range(0, 17):
            if (x + t) % 2 == 0:
                continue
            direct = y_direct(k, -0.4, beta, x, t)
            np.testing.assert_allclose(y.at(x, t), direct, rtol=1e-10, atol=1e-300)
            assert np.all(y.at(x, t) <= 0)


@pytest.mark.parametrize("t", [1, 2, 3, 4])
@pytest.mark.parametrize("N, eps", [(16, 0.25), (256, 0.008)])
def test_K4_exhaustive(t, N, eps):
    beta = 1.0
    L = window_lags(N, eps)
    x = (t + 1) % 2
    sites = sorted({(z, s) for s in range(max(1, t - L), t + 1) for z in range(x - (t - s) - 1, x + (t - s) + 2) if (z + s) % 2 == 0})
    conf = rademacher_configurations(len(sites))
    xmax = abs(x) + t + L + 2
    k = k_from_sheet(sheet_from_sites(rademacher(), sites, conf, xmax, t), beta, N, eps)
    exact = np.mean(k.at(x, t) ** 4)
    lags = min(L, t - 1)
    assert exact == pytest.approx(expected_k4(rademacher(), beta, N, lags, "wick"), rel=1e-12)
    # the single-pairing form differs whenever the window has more than one site
    single = expected_k4(rademacher(), beta, N, lags, "paper")
    assert abs(single - exact) > 0.1 * exact


def test_xi_moments_against_sampling():
    law = two_point(1.0, 0.3)
    m = xi_moments(law, 1.2, 16)
    assert abs(m[1]) < 1e-15
    th = 1.2 / 2
    b = -1.0 * 0.3 / 0.7
    vals = np.array([math.exp(th), math.exp(th * b)]) / mgf(law, th) - 1
    p = np.array([0.3, 0.7])
    for j in (2, 3, 4):
        assert m[j] == pytest.approx(float(np.sum(p * vals**j)), rel=1e-12)


def test_mean_Y_monte_carlo():
    rule = named_rule("kpz-quadratic")
    N, eps, T = 16, 0.25, 16
    beta, c = rule.constants()
    sheet = sample_sheet(rademacher(), np.arange(3000, dtype=np.uint64), T + 8, T)
    y = y_field(k_from_sheet(sheet, beta, N, eps), c, beta).at(1, T)
    exact = expected_y(rule, rademacher(), N, T, eps)
    assert abs(y.mean() - exact) < 3 * y.std() / math.sqrt(y.size)


def test_K_stationary_in_space():
    sheet = sample_sheet(uniform_centered(), np.arange(4000, dtype=np.uint64), 24, 12)
    k = k_from_sheet(sheet, 1.0, 16, 0.25)
    a, b = k.at(-5, 12) ** 4, k.at(7, 12) ** 4
    assert abs(a.mean() - b.mean()) < 3 * math.hypot(a.std(), b.std()) / math.sqrt(a.size)
    m = k.at(1, 12)
    assert abs(m.mean()) < 5 * m.std() / math.sqrt(m.size)
