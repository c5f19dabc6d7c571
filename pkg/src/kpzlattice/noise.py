"""Noise laws with exact moments and MGFs, and counter-based lattice sampling.

Every noise value is a pure function of ``(seed, x, t)``: a splitmix64-style
hash of the triple is turned into one uniform double and pushed through the
law's quantile map.  Enlarging a sheet therefore never changes values at
sites it already contained, and replicas can be generated in any order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError, UnsupportedMomentError

__all__ = [
    "NoiseLaw",
    "NoiseSheet",
    "rademacher",
    "uniform_centered",
    "truncated_gaussian",
    "two_point",
    "zero_law",
    "law_from_spec",
    "exact_moment",
    "mgf",
    "log_mgf",
    "site_uniforms",
    "noise_values",
    "sample_sheet",
    "derive_seeds",
]

FAMILIES = ("rademacher", "uniform", "truncated-gaussian", "two-point", "zero")

# exp overflows just above 709; keep a margin so m(theta) stays finite.
_EXP_LIMIT = 700.0

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class NoiseLaw:
    """A mean-zero noise distribution.

    ``params`` holds the family parameters: ``()`` for rademacher and zero,
    ``(halfwidth,)`` for uniform, ``(sigma, cutoff)`` for truncated-gaussian
    (support ``[-cutoff*sigma, cutoff*sigma]``), ``(a, p)`` for two-point
    (value ``a`` with probability ``p``, ``-a p/(1-p)`` otherwise).
    """

    family: str
    params: tuple[float, ...] = ()
    _moments: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        self._check_params()
        object.__setattr__(self, "_moments", tuple(self._closed_form_moment(k) for k in range(9)))

    def _check_params(self):
        fam, p = self.family, self.params
        expected = {"rademacher": 0, "zero": 0, "uniform": 1, "truncated-gaussian": 2, "two-point": 2}
        if len(p) != expected[fam]:
            raise ValueError(f"{fam} takes {expected[fam]} parameter(s), got {len(p)}")
        if fam == "uniform" and not p[0] > 0:
            raise ValueError("uniform halfwidth must be positive")
        if fam == "truncated-gaussian" and not (p[0] > 0 and p[1] > 0):
            raise ValueError("truncated-gaussian needs sigma > 0 and cutoff > 0")
        if fam == "two-point" and not (p[0] != 0 and 0 < p[1] < 1):
            raise ValueError("two-point needs a != 0 and 0 < p < 1")

    # -- closed forms -----------------------------------------------------

    def _closed_form_moment(self, k: int) -> float:
        fam, p = self.family, self.params
        if k == 0:
            return 1.0
        if fam == "zero":
            return 0.0
        if fam == "rademacher":
            return 1.0 if k % 2 == 0 else 0.0
        if fam == "uniform":
            return p[0] ** k / (k + 1) if k % 2 == 0 else 0.0
        if fam == "two-point":
            a, q = p
            b = -a * q / (1.0 - q)
            return q * a**k + (1.0 - q) * b**k
        # truncated gaussian: integrate by parts on [-c, c] for the standard law
        if k % 2:
            return 0.0
        sigma, c = p
        mass = math.erf(c / math.sqrt(2.0))
        edge = 2.0 * math.exp(-0.5 * c * c) / math.sqrt(2.0 * math.pi) / mass
        m = 1.0
        for j in range(2, k + 1, 2):
            m = (j - 1) * m - c ** (j - 1) * edge
        return m * sigma**k

    @property
    def mu(self) -> tuple[float, float, float, float]:
        """Exact moments (mu1, mu2, mu3, mu4)."""
        return self._moments[1:5]

    @property
    def support_bound(self) -> float:
        fam, p = self.family, self.params
        if fam == "zero":
            return 0.0
        if fam == "rademacher":
            return 1.0
        if fam == "uniform":
            return p[0]
        if fam == "truncated-gaussian":
            return p[0] * p[1]
        a, q = p
        return max(abs(a), abs(a * q / (1.0 - q)))

    @property
    def mgf_domain(self) -> tuple[float, float]:
        """Open interval of theta on which m(theta) is finite in double precision."""
        bound = self.support_bound
        if bound == 0.0:
            return (-math.inf, math.inf)
        return (-_EXP_LIMIT / bound, _EXP_LIMIT / bound)

    def to_spec(self) -> dict:
        names = {
            "rademacher": (),
            "zero": (),
            "uniform": ("halfwidth",),
            "truncated-gaussian": ("sigma", "cutoff"),
            "two-point": ("a", "p"),
        }[self.family]
        return {"family": self.family, **dict(zip(names, self.params))}


def rademacher() -> NoiseLaw:
    return NoiseLaw("rademacher")


def uniform_centered(halfwidth: float = math.sqrt(3.0)) -> NoiseLaw:
    return NoiseLaw("uniform", (halfwidth,))


def truncated_gaussian(sigma: float = 1.0, cutoff: float = 8.0) -> NoiseLaw:
    return NoiseLaw("truncated-gaussian", (sigma, cutoff))


def two_point(a: float, p: float) -> NoiseLaw:
    return NoiseLaw("two-point", (a, p))


def zero_law() -> NoiseLaw:
    """Degenerate y = 0 law, for debugging flat fixed points."""
    return NoiseLaw("zero")


def law_from_spec(spec) -> NoiseLaw:
    """Build a law from a config value: a family name or a mapping."""
    if isinstance(spec, NoiseLaw):
        return spec
    if isinstance(spec, str):
        spec = {"family": spec}
    spec = dict(spec)
    fam = spec.pop("family", None)
    if fam == "rademacher":
        law = rademacher()
    elif fam == "zero":
        law = zero_law()
    elif fam == "uniform":
        law = uniform_centered(spec.pop("halfwidth", math.sqrt(3.0)))
    elif fam == "truncated-gaussian":
        law = truncated_gaussian(spec.pop("sigma", 1.0), spec.pop("cutoff", 8.0))
    elif fam == "two-point":
        if "a" not in spec or "p" not in spec:
            raise ValueError("two-point law needs 'a' and 'p'")
        law = two_point(spec.pop("a"), spec.pop("p"))
    else:
        raise ValueError(f"unknown noise family {fam!r}")
    if spec:
        raise ValueError(f"unexpected parameters for {fam}: {sorted(spec)}")
    return law


def exact_moment(law: NoiseLaw, k: int) -> float:
    """k-th raw moment of the law, k in 1..8."""
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= 8:
        raise UnsupportedMomentError(f"moment order {k!r} unsupported for {law.family} (closed forms cover 1..8)")
    return law._moments[k]


def _check_theta(law: NoiseLaw, theta):
    lo, hi = law.mgf_domain
    arr = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= lo) or np.any(arr >= hi):
        raise DomainError(f"theta={theta!r} outside mgf domain ({lo:g}, {hi:g}) of {law.family}")
    return arr


def mgf(law: NoiseLaw, theta):
    """E[exp(theta*y)] in closed form."""
    th = _check_theta(law, theta)
    fam, p = law.family, law.params
    if fam == "zero":
        out = np.ones_like(th)
    elif fam == "rademacher":
        out = np.cosh(th)
    elif fam == "uniform":
        ht = p[0] * th
        # sinh(x)/x with the removable singularity at 0
        out = np.where(np.abs(ht) < 1e-8, 1.0 + ht * ht / 6.0, np.sinh(ht) / np.where(ht == 0, 1.0, ht))
    elif fam == "two-point":
        a, q = p
        b = -a * q / (1.0 - q)
        out = q * np.exp(a * th) + (1.0 - q) * np.exp(b * th)
    else:
        sigma, c = p
        st = sigma * th
        mass = special.ndtr(c) - special.ndtr(-c)
        out = np.exp(0.5 * st * st) * (special.ndtr(c - st) - special.ndtr(-c - st)) / mass
    return float(out) if np.ndim(out) == 0 else out


def log_mgf(law: NoiseLaw, theta):
    """log m(theta), accurate for small theta."""
    th = _check_theta(law, theta)
    if law.family == "rademacher":
        # log cosh without overflow
        a = np.abs(th)
        out = a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)
        return float(out) if np.ndim(out) == 0 else out
    return np.log(mgf(law, theta))


# -- counter-based sampling -------------------------------------------------


def _mix64(z):
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(a):
    return np.asarray(a, dtype=np.int64).astype(np.uint64)


def site_uniforms(seed, x, t):
    """Uniform(0,1) doubles keyed by (seed, x, t); inputs broadcast together."""
    with np.errstate(over="ignore"):
        key = _mix64(np.asarray(seed, dtype=np.uint64))
        h = _mix64(_mix64(key ^ _as_u64(x)) ^ _as_u64(t))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0**-53)


def noise_values(law: NoiseLaw, seed, x, t):
    """Noise y(x, t) for the given seed(s); arguments broadcast."""
    fam, p = law.family, law.params
    if fam == "zero":
        return np.zeros(np.broadcast_shapes(np.shape(seed), np.shape(x), np.shape(t)))
    u = site_uniforms(seed, x, t)
    if fam == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    if fam == "uniform":
        return p[0] * (2.0 * u - 1.0)
    if fam == "two-point":
        a, q = p
        return np.where(u < q, a, -a * q / (1.0 - q))
    sigma, c = p
    lo = special.ndtr(-c)
    return sigma * special.ndtri(lo + u * (1.0 - 2.0 * lo))


def derive_seeds(seed0: int, n: int) -> np.ndarray:
    """n independent 64-bit replica seeds derived from seed0."""
    return np.random.SeedSequence(int(seed0)).generate_state(n, dtype=np.uint64)


@dataclass(frozen=True, eq=False)
class NoiseSheet:
    """Noise on the box ``|x| <= xmax, 0 <= t <= tmax``, even sublattice only.

    ``values`` has shape ``(*batch, tmax+1, 2*xmax+1)`` with column ``x+xmax``.
    Row ``t = 0`` is zero (the surface starts flat) and odd-parity sites
    (``x+t`` odd) hold NaN.  ``seed`` is a scalar or an array matching the
    leading batch shape.
    """

    law: NoiseLaw
    seed: object
    xmax: int
    tmax: int
    values: np.ndarray

    def at(self, x: int, t: int):
        if (x + t) % 2:
            raise ValueError(f"({x}, {t}) is on the odd sublattice; noise lives on x+t even")
        return self.values[..., t, x + self.xmax]


def sample_sheet(law: NoiseLaw, seed, xmax: int, tmax: int) -> NoiseSheet:
    """Fill the box with counter-based draws; see :class:`NoiseSheet`."""
    if xmax < 0 or tmax < 0:
        raise ValueError("sheet bounds must be nonnegative")
    seeds = np.asarray(seed, dtype=np.uint64)
    x = np.arange(-xmax, xmax + 1)
    t = np.arange(0, tmax + 1)[:, None]
    vals = noise_values(law, seeds[..., None, None], x[None, :], t)
    vals = np.broadcast_to(vals, seeds.shape + (tmax + 1, 2 * xmax + 1)).copy()
    vals[..., 0, :] = 0.0
    odd = (x[None, :] + t) % 2 == 1
    vals[..., odd] = np.nan
    return NoiseSheet(law, seed, xmax, tmax, vals)
