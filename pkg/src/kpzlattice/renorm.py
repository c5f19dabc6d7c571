"""Renormalisation constants, the truncated difference field K and the Y surface.

K lives on the odd sublattice (x + t odd): it approximates the normalised
difference of the polymer partition function across the even sites x +- 1.
Y accumulates the fourth power of K through the heat kernel, so it also
lives on odd sites; Y(x, t-1) is the correction matched against
f(x, t) - f^poly(x, t).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError
from .noise import NoiseLaw, NoiseSheet, log_mgf, mgf
from .polymer import xi_field
from .surface import GrowthRule
from .walk_kernel import WalkKernel, cached_kernel, constants_c1_c2

__all__ = [
    "RenormConstants",
    "KField",
    "YField",
    "compute_constants",
    "window_lags",
    "k_field",
    "k_from_sheet",
    "y_field",
    "y_direct",
    "xi_moments",
    "window_sums",
    "expected_k4",
    "expected_y",
    "y_flatness_report",
]

DEFAULT_EPSILON = 0.008


@dataclass(frozen=True)
class RenormConstants:
    """Everything that enters the deterministic part of the rescaled surface.

    ``V`` is the constant as conventionally defined, ``V_wick`` the value
    that matches the fourth moment of a Gaussian-like sum (three pairings
    instead of one).  Drifts are per unit rescaled time and use ``V``
    unless ``v_form == "wick"``.
    """

    beta: float
    c: float
    mu2: float
    mu3: float
    mu4: float
    C1: float
    C2: float
    sum_sq: float
    V: float
    V_wick: float
    V_alt: float
    drift_cumulant_per_t: float
    drift_logmgf_per_t: float | None
    N: int
    psi00: float = 0.0
    horizon: int = 10_000
    v_form: str = "paper"
    convention: str = "paper"

    @property
    def V_used(self) -> float:
        return self.V_wick if self.v_form == "wick" else self.V

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def compute_constants(
    rule: GrowthRule,
    law: NoiseLaw,
    N: int,
    kernel_horizon: int = 10_000,
    v_form: str = "paper",
    convention: str = "paper",
) -> RenormConstants:
    """Kernel sums, V in both forms and the two per-unit-time drifts.

    ``convention`` picks which (beta, c) pair of the rule is used; see
    :meth:`GrowthRule.constants`.
    """
    if v_form not in ("paper", "wick"):
        raise ValueError("v_form must be 'paper' or 'wick'")
    kc = constants_c1_c2(kernel_horizon)
    _, m2, m3, m4 = law.mu
    beta, c = rule.constants(convention)
    V = c * (kc.C1 * (m4 - m2**2) + (kc.sum_sq * m2) ** 2)
    V_alt = c * (kc.C1 * m4 + kc.C2 * m2**2)
    V_wick = c * (kc.C1 * (m4 - 3 * m2**2) + 3 * (kc.sum_sq * m2) ** 2)
    Vu = V_wick if v_form == "wick" else V
    base = N * rule.psi00
    cum = Vu + 0.5 * beta * N**0.5 * m2 + beta**2 * N**0.25 * m3 / 6 + beta**3 * (m4 - 3 * m2**2) / 24 + base
    lmg = None
    if beta != 0:
        lmg = Vu + N / beta * float(log_mgf(law, beta * N**-0.25)) + base
    return RenormConstants(
        beta, c, m2, m3, m4, kc.C1, kc.C2, kc.sum_sq, V, V_wick, V_alt, cum, lmg, N,
        rule.psi00, kernel_horizon, v_form, convention,
    )


# -- K and Y ---------------------------------------------------------------------


def window_lags(N: int, epsilon: float) -> int:
    """Largest lag r = t - s allowed by the window t - N^eps <= s <= t."""
    if not 0 < epsilon <= 0.3:
        raise ValueError(f"epsilon must lie in (0, 0.3], got {epsilon}")
    return int(math.floor(N**epsilon + 1e-12))


@dataclass(frozen=True, eq=False)
class KField:
    """K on the odd sublattice; NaN where the window reaches outside the sheet."""

    values: np.ndarray
    N: int
    epsilon: float
    lags: int
    factor: float
    xmax: int
    tmax: int
    beta_zero: bool = False

    def at(self, x: int, t: int):
        if (x + t) % 2 == 0:
            raise ValueError("K lives on the odd sublattice (x + t odd)")
        if not 0 <= t <= self.tmax or abs(x) > self.xmax:
            raise BoundsError(f"({x}, {t}) outside the K window")
        return self.values[..., t, x + self.xmax]


@dataclass(frozen=True, eq=False)
class YField:
    values: np.ndarray
    c: float
    beta: float
    prefactor: float
    source: KField = field(repr=False)

    @property
    def xmax(self) -> int:
        return self.source.xmax

    @property
    def tmax(self) -> int:
        return self.source.tmax

    def at(self, x: int, t: int):
        if (x + t) % 2 == 0:
            raise ValueError("Y lives on the odd sublattice (x + t odd)")
        if not 0 <= t <= self.tmax or abs(x) > self.xmax:
            raise BoundsError(f"({x}, {t}) outside the Y window")
        return self.values[..., t, x + self.xmax]


def k_field(
    source: np.ndarray,
    N: int,
    epsilon: float = DEFAULT_EPSILON,
    factor: float = 0.5,
    kernel: WalkKernel | None = None,
    beta_zero: bool = False,
) -> KField:
    """K(x,t) = factor * sum over lags r <= N^eps (and s = t - r >= 1) of delta(x-z, r) source(z, t-r).

    ``source`` is xi (factor 1/2) or N^{-1/4} y for beta = 0 (factor 1),
    laid out like a noise sheet.
    """
    L = window_lags(N, epsilon)
    if kernel is None:
        kernel = cached_kernel(max(L, 1))
    if kernel.horizon < L:
        raise BoundsError(f"kernel horizon {kernel.horizon} shorter than the window {L}")
    T1, W = source.shape[-2:]
    xmax = (W - 1) // 2
    src = np.nan_to_num(source, nan=0.0)
    src[..., 0, :] = 0.0
    K = np.zeros(source.shape)
    for r in range(L + 1):
        if r >= T1:
            break
        row = kernel.delta_row(r)  # x = -(r+1) .. r+1
        for j, w in enumerate(row):
            if w == 0.0:
                continue
            k = j - (r + 1)  # K(x,t) += w src(x - k, t - r)
            dst = slice(max(0, k), W + min(0, k))
            srcs = slice(max(0, -k), W - max(0, k))
            K[..., r:, dst] += factor * w * src[..., : T1 - r, srcs]
    x = np.arange(-xmax, xmax + 1)
    t = np.arange(T1)[:, None]
    valid = ((x[None, :] + t) % 2 == 1) & (np.abs(x)[None, :] + L + 1 <= xmax)
    K[..., ~valid] = np.nan
    return KField(K, N, epsilon, L, factor, xmax, T1 - 1, beta_zero)


def k_from_sheet(sheet: NoiseSheet, beta: float, N: int, epsilon: float = DEFAULT_EPSILON, kernel=None) -> KField:
    """K built from the sheet's xi field, or from N^{-1/4} y when beta is zero."""
    if beta == 0:
        return k_field(N**-0.25 * sheet.values, N, epsilon, 1.0, kernel, beta_zero=True)
    return k_field(xi_field(sheet, beta, N), N, epsilon, 0.5, kernel)


def _prefactor(c: float, beta: float) -> float:
    return c if beta == 0 else 16.0 * c / beta**4


def y_field(k: KField, c: float, beta: float) -> YField:
    """Forward accumulation Y(x,t) = mean of Y(x+-1, t-1) + pref * K(x,t)^4, Y(., 0) = 0."""
    pref = _prefactor(c, beta)
    K = k.values
    Y = np.full(K.shape, np.nan)
    T1, W = K.shape[-2:]
    x = np.arange(-k.xmax, k.xmax + 1)
    odd0 = x % 2 == 1
    Y[..., 0, odd0] = 0.0 if pref == 0 else pref * K[..., 0, odd0] ** 4
    for t in range(1, T1):
        Y[..., t, 1:-1] = 0.5 * (Y[..., t - 1, :-2] + Y[..., t - 1, 2:]) + pref * K[..., t, 1:-1] ** 4
    return YField(Y, c, beta, pref, k)


def y_direct(k: KField, c: float, beta: float, x: int, t: int, kernel: WalkKernel | None = None):
    """pref * sum_{1 <= s <= t} sum_z p(x - z, t - s) K(z, s)^4, evaluated term by term."""
    pref = _prefactor(c, beta)
    kernel = kernel or cached_kernel(max(t, 1))
    total = np.zeros(k.values.shape[:-2])
    for s in range(1, t + 1):
        r = t - s
        z = np.arange(x - r, x + r + 1, 2)
        total = total + np.sum(kernel.p(x - z, r) * k.values[..., s, z + k.xmax] ** 4, axis=-1)
    return pref * total


# -- exact expectations -----------------------------------------------------------------


def xi_moments(law: NoiseLaw, beta: float, N: int) -> dict:
    """Exact E[xi^k], k = 1..4, from the moment generating function."""
    theta = beta * N**-0.25
    m1 = float(mgf(law, theta))
    out = {}
    for k in range(1, 5):
        out[k] = sum(math.comb(k, j) * (-1) ** (k - j) * float(mgf(law, j * theta)) / m1**j for j in range(k + 1))
    return out


def window_sums(lags: int, kernel: WalkKernel | None = None) -> tuple[float, float]:
    """(sum delta^2, sum delta^4) over lags 0..lags."""
    kernel = kernel or cached_kernel(max(lags, 1))
    d = np.concatenate([kernel.delta_row(r) for r in range(lags + 1)])
    return float(np.sum(d**2)), float(np.sum(d**4))


def _source_moments(law: NoiseLaw, beta: float, N: int) -> tuple[float, float, float]:
    if beta == 0:
        _, m2, _, m4 = law.mu
        return 1.0, m2 / N**0.5, m4 / N
    m = xi_moments(law, beta, N)
    return 0.5, m[2], m[4]


def expected_k4(law: NoiseLaw, beta: float, N: int, lags: int, form: str = "wick") -> float:
    """E[K^4] for a window of ``lags + 1`` time slices.

    ``form="wick"`` is the exact fourth moment of a weighted sum of i.i.d.
    centred variables; ``form="paper"`` keeps a single pairing, which is
    what the conventional V formula integrates.
    """
    f, m2, m4 = _source_moments(law, beta, N)
    a2, a4 = window_sums(lags)
    if form == "wick":
        val = a4 * (m4 - 3 * m2**2) + 3 * (a2 * m2) ** 2
    elif form == "paper":
        val = a4 * (m4 - m2**2) + (a2 * m2) ** 2
    else:
        raise ValueError("form must be 'wick' or 'paper'")
    return f**4 * val


def expected_y(
    rule: GrowthRule,
    law: NoiseLaw,
    N: int,
    t: int,
    epsilon: float = DEFAULT_EPSILON,
    form: str = "wick",
    convention: str = "paper",
) -> float:
    """Exact E[Y(x, t)] for a site whose backward cone stays inside the sheet."""
    L = window_lags(N, epsilon)
    beta, c = rule.constants(convention)
    pref = _prefactor(c, beta)
    return pref * sum(expected_k4(law, beta, N, min(L, s - 1), form) for s in range(1, t + 1))


def y_flatness_report(y: YField, xs: range | None = None, ts: range | None = None) -> dict:
    """Spatial flatness of Y over a window (defaults to every valid site).

    Returns per-replica arrays: ``sup_dev`` is the largest |Y - slice mean|,
    ``sup_diff`` the largest |Y(x+1,t) - Y(x-1,t)|.
    """
    Y = y.values
    xm = y.xmax
    xs = xs if xs is not None else range(-xm, xm + 1)
    ts = ts if ts is not None else range(0, y.tmax + 1)
    cols = np.array([x + xm for x in xs])
    block = Y[..., list(ts), :][..., cols]
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(block, axis=-1, keepdims=True)
        dev = np.nan_to_num(np.abs(block - mean), nan=0.0)
        diff = np.abs(block[..., 2:] - block[..., :-2])
    diff = np.nan_to_num(diff, nan=0.0)
    return {
        "sup_dev": np.max(dev, axis=(-2, -1)),
        "sup_diff": np.max(diff, axis=(-2, -1)) if diff.size else np.zeros(Y.shape[:-2]),
        "mean_by_t": np.nan_to_num(mean[..., 0], nan=0.0),
    }
