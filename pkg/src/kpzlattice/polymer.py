"""Directed polymer reference surface at intermediate disorder.

The polymer surface uses phi_poly(u) = log cosh(beta u) / beta, which turns
the growth recursion into a linear one for X = exp(beta f^poly):

    X(x, t) = (1 + xi(x, t)) * Gamma(x, t),
    Gamma(x, t) = (X(x-1, t-1) + X(x+1, t-1)) / 2,
    xi = exp(theta y) / m(theta) - 1,   theta = beta N^{-1/4}.

Heights are evolved in log space and X is recovered by exponentiation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError
from .lattice import check_site, grow_rows
from .noise import NoiseLaw, NoiseSheet, log_mgf, sample_sheet
from .walk_kernel import WalkKernel

__all__ = [
    "PolymerField",
    "xi_values",
    "xi_field",
    "grow_polymer",
    "polymer_from_sheet",
    "duhamel_expand",
    "x_difference_series",
    "log_odds_diff",
    "light_cone_sites",
    "sheet_from_sites",
    "rademacher_configurations",
]


def _theta(law: NoiseLaw, beta: float, N: int) -> tuple[float, float]:
    if beta == 0:
        raise ValueError("the polymer needs beta != 0")
    theta = beta * N**-0.25
    # m(2 theta) enters second moments of xi; check both ends of the domain up front
    log_mgf(law, 2 * theta)
    return theta, float(log_mgf(law, theta))


def xi_values(y, law: NoiseLaw, beta: float, N: int):
    """Centered tilt exp(theta y)/m(theta) - 1 of raw noise values."""
    theta, lm = _theta(law, beta, N)
    return np.expm1(theta * np.asarray(y, dtype=float) - lm)


def xi_field(sheet: NoiseSheet, beta: float, N: int) -> np.ndarray:
    """xi on the sheet's box; row 0 and odd sites are NaN."""
    xi = xi_values(sheet.values, sheet.law, beta, N)
    xi[..., 0, :] = np.nan
    return xi


@dataclass(frozen=True, eq=False)
class PolymerField:
    """Polymer heights, partition function and midpoint field on one box.

    Arrays share the layout of :class:`~kpzlattice.noise.NoiseSheet`.
    ``Gamma`` is NaN at t = 0.
    """

    fpoly: np.ndarray
    X: np.ndarray
    Gamma: np.ndarray
    xi: np.ndarray
    beta: float
    N: int
    seed: object
    law: NoiseLaw
    xmax: int
    tmax: int

    def at(self, name: str, x: int, t: int):
        check_site(self.xmax, self.tmax, x, t)
        return getattr(self, name)[..., t, x + self.xmax]


def polymer_from_sheet(sheet: NoiseSheet, beta: float, N: int) -> PolymerField:
    theta, lm = _theta(sheet.law, beta, N)
    inv = 1.0 / beta
    amp = N**-0.25
    shift = inv * (math.log(2.0) + lm)
    vals = sheet.values

    def update(a, b, y, t, sites):
        return inv * np.logaddexp(beta * a, beta * b) + amp * y - shift

    batch = vals.shape[:-2]
    shape = batch + (sheet.tmax + 1, 2 * sheet.xmax + 1)
    fpoly = np.empty(shape)
    for t, row in grow_rows(update, lambda t, s: vals[..., t, s], sheet.xmax, sheet.tmax, batch):
        fpoly[..., t, :] = row
    X = np.exp(beta * fpoly)
    gamma = np.full(shape, np.nan)
    gamma[..., 1:, 1:-1] = 0.5 * (X[..., :-1, :-2] + X[..., :-1, 2:])
    gamma[np.isnan(X)] = np.nan
    return PolymerField(fpoly, X, gamma, xi_field(sheet, beta, N), float(beta), N, sheet.seed, sheet.law, sheet.xmax, sheet.tmax)


def grow_polymer(law: NoiseLaw, beta: float, N: int, seed, xmax: int, tmax: int) -> PolymerField:
    """Sample a sheet and grow the polymer on it; see :func:`polymer_from_sheet`."""
    _theta(law, beta, N)
    return polymer_from_sheet(sample_sheet(law, seed, xmax, tmax), beta, N)


def _cone_check(pf: PolymerField, kernel: WalkKernel, x: int, t: int, reach: int = 0):
    check_site(pf.xmax, pf.tmax, x, t)
    if abs(x) + reach + t > pf.xmax:
        raise BoundsError(f"backward light cone of ({x}, {t}) leaves the stored box |x| <= {pf.xmax - t}")
    if kernel.horizon < t:
        raise BoundsError(f"kernel horizon {kernel.horizon} < t = {t}")


def _weighted_sum(pf: PolymerField, weights, x: int, t: int, reach: int):
    """sum over even (z, s), 1 <= s <= t, of w(x - z, t - s) xi(z, s) Gamma(z, s)."""
    total = np.zeros(pf.X.shape[:-2])
    for s in range(1, t + 1):
        r = t - s
        lo, hi = x - r - reach, x + r + reach
        z = np.arange(lo, hi + 1)
        z = z[(z + s) % 2 == 0]
        w = weights(x - z, r)
        cols = z + pf.xmax
        total = total + np.sum(w * pf.xi[..., s, cols] * pf.Gamma[..., s, cols], axis=-1)
    return total


def duhamel_expand(pf: PolymerField, kernel: WalkKernel, x: int, t: int):
    """Right side of X(x,t) = 1 + sum p(x-z, t-s) xi(z,s) Gamma(z,s)."""
    if (x + t) % 2:
        raise ValueError("X lives on the even sublattice")
    _cone_check(pf, kernel, x, t)
    return 1.0 + _weighted_sum(pf, kernel.p, x, t, 0)


def x_difference_series(pf: PolymerField, kernel: WalkKernel, x: int, t: int):
    """Right side of X(x+1,t) - X(x-1,t) = sum delta(x-z, t-s) xi(z,s) Gamma(z,s)."""
    if (x + t) % 2 == 0:
        raise ValueError("the difference X(x+1,t) - X(x-1,t) needs x + t odd")
    _cone_check(pf, kernel, x, t, reach=1)
    if t == 0:
        return np.zeros(pf.X.shape[:-2])
    return _weighted_sum(pf, kernel.delta, x, t, 1)


def log_odds_diff(pf: PolymerField, x: int, t: int):
    """(f^poly(x+1,t) - f^poly(x-1,t), r) with r the normalised difference of X.

    The two are tied by diff = (log(1+r) - log(1-r)) / beta.
    """
    check_site(pf.xmax, pf.tmax, x + 1, t)
    check_site(pf.xmax, pf.tmax, x - 1, t)
    lo, hi = pf.fpoly[..., t, x - 1 + pf.xmax], pf.fpoly[..., t, x + 1 + pf.xmax]
    xl, xh = pf.X[..., t, x - 1 + pf.xmax], pf.X[..., t, x + 1 + pf.xmax]
    return hi - lo, (xh - xl) / (xh + xl)


# -- exhaustive enumeration helpers ------------------------------------------------


def light_cone_sites(x: int, t: int, reach: int = 0) -> list[tuple[int, int]]:
    """Even sites (z, s), 1 <= s <= t, with |z - x| <= t - s + reach."""
    out = []
    for s in range(1, t + 1):
        for z in range(x - (t - s) - reach, x + (t - s) + reach + 1):
            if (z + s) % 2 == 0:
                out.append((z, s))
    return out


def rademacher_configurations(n: int) -> np.ndarray:
    """All 2^n sign vectors, shape (2^n, n)."""
    if n > 22:
        raise ValueError(f"2^{n} configurations is too many to enumerate")
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n))).reshape(-1, n)


def sheet_from_sites(law: NoiseLaw, sites, values: np.ndarray, xmax: int, tmax: int) -> NoiseSheet:
    """Batch sheet holding ``values[:, k]`` at ``sites[k]`` and zero elsewhere on the even sublattice."""
    values = np.asarray(values, dtype=float)
    batch = values.shape[:-1]
    grid = np.zeros(batch + (tmax + 1, 2 * xmax + 1))
    x = np.arange(-xmax, xmax + 1)
    tt = np.arange(tmax + 1)[:, None]
    grid[..., (x[None, :] + tt) % 2 == 1] = np.nan
    for k, (z, s) in enumerate(sites):
        grid[..., s, z + xmax] = values[..., k]
    return NoiseSheet(law, None, xmax, tmax, grid)
