"""Parabolic rescaling, piecewise-linear interpolation and the coupling field.

Lattice sites with x + t even form a triangulated lattice.  In the sheared
coordinates a = (x + t)/2, b = (t - x)/2 the sites are the integer points
and every unit square is split along its anti-diagonal, which is the
horizontal edge (x, t)-(x + 2, t).  Locating a point is then a floor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError
from .noise import NoiseLaw, log_mgf, sample_sheet
from .polymer import PolymerField, log_odds_diff, polymer_from_sheet
from .renorm import DEFAULT_EPSILON, KField, RenormConstants, k_from_sheet, window_lags, y_field
from .surface import GrowthRule, SurfaceField, grow

__all__ = [
    "barycentric",
    "interpolate_lattice",
    "RescaledSurface",
    "rescale",
    "CouplingField",
    "coupling_delta",
    "ratio_vs_K_diagnostic",
]


_NEGLIGIBLE = 1e-12


def barycentric(X: float, T: float):
    """Corners (x, t) and weights of the triangle containing lattice point (X, T)."""
    a, b = (X + T) / 2.0, (T - X) / 2.0
    a0, b0 = math.floor(a), math.floor(b)
    fa, fb = a - a0, b - b0
    if fa + fb <= 1.0:
        corners = ((a0, b0), (a0 + 1, b0), (a0, b0 + 1))
        weights = (1.0 - fa - fb, fa, fb)
    else:
        corners = ((a0 + 1, b0 + 1), (a0 + 1, b0), (a0, b0 + 1))
        weights = (fa + fb - 1.0, 1.0 - fb, 1.0 - fa)
    return [(ai - bi, ai + bi) for ai, bi in corners], weights


def interpolate_lattice(values: np.ndarray, xmax: int, X: float, T: float):
    """Barycentric interpolation of an even-sublattice array at lattice point (X, T).

    ``values`` has layout ``(*batch, tmax+1, 2*xmax+1)``; any corner that is
    outside the array or NaN raises :class:`BoundsError`.
    """
    if T < 0:
        raise BoundsError("time must be nonnegative")
    tmax = values.shape[-2] - 1
    corners, weights = barycentric(X, T)
    out = 0.0
    for (x, t), w in zip(corners, weights):
        inside = 0 <= t <= tmax and abs(x) <= xmax
        # rounding can hand a vanishing weight to a corner across the boundary
        if w == 0.0 or (abs(w) < _NEGLIGIBLE and not inside):
            continue
        if not inside:
            raise BoundsError(f"corner ({x}, {t}) of ({X}, {T}) outside the stored window")
        v = values[..., t, x + xmax]
        if np.any(np.isnan(v)):
            raise BoundsError(f"corner ({x}, {t}) of ({X}, {T}) is outside the valid light cone")
        out = out + w * v
    return out


@dataclass(frozen=True, eq=False)
class RescaledSurface:
    """f~(x, t) = f(sqrt(N) x, N t) minus the per-unit-time drift, in rescaled units.

    ``adjusted`` already carries the drift correction on every lattice site,
    so interpolation is a plain barycentric combination.
    """

    adjusted: np.ndarray
    N: int
    xmax: int
    drift_per_t: float
    mode: str

    def lattice_value(self, X: float, T: float):
        return interpolate_lattice(self.adjusted, self.xmax, X, T)

    def __call__(self, x: float, t: float):
        return self.lattice_value(math.sqrt(self.N) * x, self.N * t)


def _base_drift(base) -> tuple[np.ndarray, float, int, int, float]:
    """(heights, drift already subtracted per step, N, xmax, psi00)."""
    if isinstance(base, PolymerField):
        step = float(log_mgf(base.law, base.beta * base.N**-0.25)) / base.beta
        return base.fpoly, step, base.N, base.xmax, 0.0
    return base.heights, base.drift_per_step, base.N, base.xmax, base.rule.psi00


def rescale(base, constants: RenormConstants | None = None, mode: str = "cumulant") -> RescaledSurface:
    """Wrap a grown surface (or polymer) as the renormalised rescaled surface.

    The target drift per unit rescaled time is ``constants.drift_cumulant_per_t``
    or ``constants.drift_logmgf_per_t``.  For a polymer without constants the
    target is its own ``N log m / beta`` (V = 0).
    """
    heights, subtracted, N, xmax, psi00 = _base_drift(base)
    if constants is None:
        if not isinstance(base, PolymerField):
            raise ValueError("constants are required for a growth-rule surface")
        target = N * subtracted
    else:
        if constants.N != N:
            raise ValueError(f"constants computed for N={constants.N}, surface has N={N}")
        if mode == "cumulant":
            target = constants.drift_cumulant_per_t
        elif mode == "logmgf":
            if constants.drift_logmgf_per_t is None:
                raise ValueError("logmgf mode needs beta != 0")
            target = constants.drift_logmgf_per_t
        else:
            raise ValueError("mode must be 'cumulant' or 'logmgf'")
    per_step = subtracted + psi00 - target / N
    t = np.arange(heights.shape[-2])[:, None]
    return RescaledSurface(heights + per_step * t, N, xmax, float(target), mode)


@dataclass(frozen=True, eq=False)
class CouplingField:
    """delta(x, t) = f(x, t) - f^poly(x, t) - Y(x, t-1) on even sites.

    Y lives on odd sites; the value directly below (x, t) is the
    accumulated fourth-order correction feeding f(x, t).  ``sup_delta`` is the
    per-replica sup of |delta| over the requested window.
    """

    delta: np.ndarray
    f: SurfaceField
    poly: PolymerField
    k: KField
    Y: np.ndarray
    sup_delta: np.ndarray
    window: tuple[int, int]
    beta_poly: float

    @property
    def xmax(self) -> int:
        return self.poly.xmax


def coupling_delta(
    rule: GrowthRule,
    law: NoiseLaw,
    N: int,
    seed,
    a: float = 1.0,
    b: float = 1.0,
    epsilon: float = DEFAULT_EPSILON,
    convention: str = "paper",
    beta: float | None = None,
) -> CouplingField:
    """Grow f, f^poly and Y from one noise sheet and return delta on [-aN, aN] x [0, bN]."""
    beta_r, c = rule.constants(convention)
    beta_p = beta_r if beta is None else float(beta)
    if beta_p == 0:
        raise ValueError("coupling needs beta != 0")
    X, T = int(round(a * N)), int(round(b * N))
    L = window_lags(N, epsilon)
    xmax = X + T + L + 2
    sheet = sample_sheet(law, seed, xmax, T)
    f = grow(rule, sheet, N, "logmgf", convention=convention)
    pf = polymer_from_sheet(sheet, beta_p, N)
    k = k_from_sheet(sheet, beta_p, N, epsilon)
    Y = y_field(k, c, beta_p).values
    delta = np.full(f.heights.shape, np.nan)
    delta[..., 0, :] = f.heights[..., 0, :] - pf.fpoly[..., 0, :]
    delta[..., 1:, :] = f.heights[..., 1:, :] - pf.fpoly[..., 1:, :] - Y[..., :-1, :]
    cols = slice(xmax - X, xmax + X + 1)
    with np.errstate(invalid="ignore"):
        sup = np.nanmax(np.abs(delta[..., : T + 1, cols]), axis=(-2, -1))
    return CouplingField(delta, f, pf, k, Y, sup, (X, T), beta_p)


def ratio_vs_K_diagnostic(pf: PolymerField, k: KField, probes) -> dict:
    """sup over odd probe sites of |r - K| and of |diff^4 - 16 K^4 / beta^4|.

    ``r`` is the normalised difference of X across the probe and ``diff`` the
    matching height difference of the polymer.
    """
    sup_r = np.zeros(pf.X.shape[:-2])
    sup_4 = np.zeros(pf.X.shape[:-2])
    for x, t in probes:
        diff, r = log_odds_diff(pf, x, t)
        kv = k.at(x, t)
        sup_r = np.maximum(sup_r, np.abs(r - kv))
        sup_4 = np.maximum(sup_4, np.abs(diff**4 - 16 * kv**4 / pf.beta**4))
    return {"sup_r_minus_K": sup_r, "sup_fourth_power": sup_4, "n_probes": len(list(probes))}
