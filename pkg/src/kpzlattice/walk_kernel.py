"""Simple random walk kernel, difference kernel and generating functions.

``p(x, t)`` is the law of a simple symmetric walk at time ``t``; the
difference kernel is ``delta(x, t) = p(x+1, t) - p(x-1, t)``.  Rows are built
by the Pascal recursion in double precision, which stays accurate at
``t = 10**4`` where binomial coefficients overflow.

The second half of the module works with the lazy difference walk (stay with
probability 1/2, step +-1 with probability 1/4 each) and the generating
functions of its first returns, together with brute-force oracles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DomainError
from .noise import NoiseLaw, mgf

__all__ = [
    "WalkKernel",
    "KernelConstants",
    "build_kernel",
    "pascal_rows",
    "constants_c1_c2",
    "gf_identity_report",
    "PowerSeries",
    "series_P",
    "series_O_SO",
    "series_R",
    "series_E",
    "lazy_walk_counts",
    "brute_intersections",
    "sample_intersections",
    "mu_of",
]

# Default memory budget for a stored kernel, in bytes.
KERNEL_BUDGET = 512 * 2**20
SERIES_MAX_ORDER = 64


@dataclass(frozen=True, eq=False)
class WalkKernel:
    """Tabulated ``p`` and ``delta`` rows up to ``horizon``.

    Both arrays have shape ``(horizon+1, 2*horizon+3)`` and column ``x + horizon + 1``,
    so every row covers ``|x| <= horizon + 1`` (the support of ``delta``).
    """

    horizon: int
    p_rows: np.ndarray
    delta_rows: np.ndarray

    @property
    def offset(self) -> int:
        return self.horizon + 1

    def p(self, x, t):
        x = np.asarray(x)
        inside = np.abs(x) <= self.offset
        idx = np.clip(x + self.offset, 0, 2 * self.offset)
        return np.where(inside, self.p_rows[t, idx], 0.0)

    def delta(self, x, t):
        x = np.asarray(x)
        inside = np.abs(x) <= self.offset
        idx = np.clip(x + self.offset, 0, 2 * self.offset)
        return np.where(inside, self.delta_rows[t, idx], 0.0)

    def p_row(self, t: int) -> np.ndarray:
        """``p(x, t)`` for ``x = -(t+1) .. t+1``."""
        o = self.offset
        return self.p_rows[t, o - t - 1 : o + t + 2]

    def delta_row(self, t: int) -> np.ndarray:
        """``delta(x, t)`` for ``x = -(t+1) .. t+1``."""
        o = self.offset
        return self.delta_rows[t, o - t - 1 : o + t + 2]


def pascal_rows(horizon: int):
    """Yield ``(t, row)`` for t = 0..horizon; row is ``p(., t)`` on ``|x| <= horizon+1``.

    Only two rows are alive at a time, so this also serves the streaming
    constants computation.
    """
    width = 2 * horizon + 3
    row = np.zeros(width)
    row[horizon + 1] = 1.0
    yield 0, row
    for t in range(1, horizon + 1):
        nxt = np.zeros(width)
        nxt[1:-1] = 0.5 * (row[:-2] + row[2:])
        row = nxt
        yield t, row


def build_kernel(horizon: int, budget: int = KERNEL_BUDGET) -> WalkKernel:
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    need = 2 * 8 * (horizon + 1) * (2 * horizon + 3)
    if need > budget:
        raise CapacityError(
            f"kernel with horizon {horizon} needs {need / 2**20:.0f} MiB > budget {budget / 2**20:.0f} MiB; "
            "use constants_c1_c2 for streaming sums"
        )
    p = np.empty((horizon + 1, 2 * horizon + 3))
    for t, row in pascal_rows(horizon):
        p[t] = row
    d = np.zeros_like(p)
    d[:, 1:-1] = p[:, 2:] - p[:, :-2]
    d[:, 0], d[:, -1] = p[:, 1], -p[:, -2]
    p.setflags(write=False)
    d.setflags(write=False)
    return WalkKernel(horizon, p, d)


@lru_cache(maxsize=8)
def cached_kernel(horizon: int) -> WalkKernel:
    return build_kernel(horizon)


@dataclass(frozen=True)
class KernelConstants:
    """Truncated kernel sums over ``0 <= t <= horizon`` and their tail bounds.

    ``decay_constant`` is the fitted ``C`` in ``sum_x delta(x,t)^2 <= C t^{-3/2}``
    (max over ``1 <= t <= horizon``); the ``tail_*`` fields bound what the
    omitted rows ``t > horizon`` could add.
    """

    horizon: int
    C1: float
    C2: float
    sum_sq: float
    decay_constant: float
    tail_sum_sq: float
    tail_C1: float
    tail_C2: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@lru_cache(maxsize=16)
def constants_c1_c2(horizon: int) -> KernelConstants:
    """Stream the Pascal rows and accumulate C1, sum_sq and C2 = sum_sq^2 - C1."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    c1 = 0.0
    sq = 0.0
    decay = 0.0
    last_max_sq = 0.0
    for t, row in pascal_rows(horizon):
        # pad so the last row keeps delta(+-(horizon+1), horizon)
        padded = np.pad(row, 1)
        d = padded[2:] - padded[:-2]
        d2 = d * d
        row_sq = float(d2.sum())
        c1 += float((d2 * d2).sum())
        sq += row_sq
        if t >= 1:
            decay = max(decay, row_sq * t**1.5)
        last_max_sq = float(d2.max())
    # sum_{t > T} t^{-3/2} <= 2 / sqrt(T)
    tail_sq = decay * 2.0 / math.sqrt(horizon)
    # max |delta| is nonincreasing in t, so delta^4 <= max(delta^2) * delta^2 on the tail
    tail_c1 = last_max_sq * tail_sq
    tail_c2 = 2.0 * sq * tail_sq + tail_sq**2 + tail_c1
    return KernelConstants(horizon, c1, sq * sq - c1, sq, decay, tail_sq, tail_c1, tail_c2)


# -- formal power series ------------------------------------------------------


class PowerSeries:
    """Truncated power series ``a_0 + a_1 z + ... + a_n z^n``.

    Coefficients may be floats or :class:`fractions.Fraction`; arithmetic
    never mixes in floats on its own, so Fraction inputs stay exact.
    """

    __slots__ = ("coeffs", "radius_note")

    def __init__(self, coeffs, radius_note: str = ""):
        coeffs = list(coeffs)
        if not coeffs:
            raise ValueError("empty series")
        if len(coeffs) - 1 > SERIES_MAX_ORDER:
            raise CapacityError(f"series order capped at {SERIES_MAX_ORDER}")
        self.coeffs = coeffs
        self.radius_note = radius_note

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k] if k <= self.order else 0

    def __repr__(self):
        return f"PowerSeries({self.coeffs!r})"

    def _coerce(self, other):
        if isinstance(other, PowerSeries):
            return other
        return PowerSeries([other] + [0] * self.order)

    def truncate(self, n: int) -> "PowerSeries":
        c = self.coeffs[: n + 1]
        return PowerSeries(c + [0] * (n + 1 - len(c)), self.radius_note)

    def __add__(self, other):
        other = self._coerce(other)
        n = min(self.order, other.order)
        return PowerSeries([self[k] + other[k] for k in range(n + 1)])

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries([-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            return PowerSeries([a * other for a in self.coeffs], self.radius_note)
        n = min(self.order, other.order)
        out = []
        for k in range(n + 1):
            acc = 0
            for i in range(k + 1):
                acc = acc + self.coeffs[i] * other.coeffs[k - i]
            out.append(acc)
        return PowerSeries(out)

    __rmul__ = __mul__

    def shift(self, k: int = 1) -> "PowerSeries":
        """Multiply by ``z**k``, keeping the order."""
        zero = self.coeffs[0] * 0
        return PowerSeries([zero] * k + self.coeffs[: self.order + 1 - k])

    def reciprocal(self) -> "PowerSeries":
        a0 = self.coeffs[0]
        if a0 == 0:
            raise ZeroDivisionError("series with zero constant term has no reciprocal")
        out = [1 / a0]
        for k in range(1, self.order + 1):
            acc = 0
            for i in range(1, k + 1):
                acc = acc + self.coeffs[i] * out[k - i]
            out.append(-acc / a0)
        return PowerSeries(out)

    def __truediv__(self, other):
        if isinstance(other, PowerSeries):
            return self * other.reciprocal()
        return PowerSeries([a / other for a in self.coeffs])

    def compose(self, inner: "PowerSeries") -> "PowerSeries":
        """``self(inner(z))`` for ``inner`` with zero constant term (Horner)."""
        if inner[0] != 0:
            raise ValueError("inner series must have zero constant term")
        n = min(self.order, inner.order)
        inner = inner.truncate(n)
        acc = PowerSeries([self.coeffs[n]] + [0 * self.coeffs[n]] * n)
        for k in range(n - 1, -1, -1):
            acc = acc * inner + self.coeffs[k]
        return acc

    def allclose(self, other, atol: float) -> bool:
        other = self._coerce(other)
        n = min(self.order, other.order)
        return all(abs(self[k] - other[k]) <= atol for k in range(n + 1))


def _check_order(n: int):
    if n < 0:
        raise ValueError("order must be nonnegative")
    if n > SERIES_MAX_ORDER:
        raise CapacityError(f"series order capped at {SERIES_MAX_ORDER}")


def _sqrt_one_minus_z(n: int, exact: bool) -> list:
    """Coefficients of sqrt(1-z): s_0 = 1, s_k = s_{k-1} (k - 3/2)/k."""
    one = Fraction(1) if exact else 1.0
    s = [one]
    for k in range(1, n + 1):
        ratio = Fraction(2 * k - 3, 2 * k) if exact else (k - 1.5) / k
        s.append(s[-1] * ratio)
    return s


def _inv_sqrt_one_minus_z(n: int, exact: bool) -> list:
    """Coefficients of 1/sqrt(1-z): r_0 = 1, r_k = r_{k-1} (k - 1/2)/k."""
    one = Fraction(1) if exact else 1.0
    r = [one]
    for k in range(1, n + 1):
        ratio = Fraction(2 * k - 1, 2 * k) if exact else (k - 0.5) / k
        r.append(r[-1] * ratio)
    return r


def series_P(order: int, exact: bool = False) -> PowerSeries:
    """First-return generating function of the lazy walk, 1 - sqrt(1 - z)."""
    _check_order(order)
    s = _sqrt_one_minus_z(order, exact)
    coeffs = [s[0] * 0] + [-c for c in s[1:]]
    return PowerSeries(coeffs, "|z| < 1")


def series_O_SO(order: int, exact: bool = False) -> tuple[PowerSeries, PowerSeries]:
    """(O, SO): returns to 0 staying >= 0, and staying > 0 before returning."""
    _check_order(order)
    s = _sqrt_one_minus_z(order + 2, exact)
    half = Fraction(1, 2) if exact else 0.5
    # 1 - z/2 - sqrt(1-z) has zero z^0 and z^1 terms; its z^k coefficient is -s_k for k >= 2
    O = PowerSeries([-8 * s[k + 2] for k in range(order + 1)], "|z| < 1")
    SO = [s[0] * 0] * (order + 1)
    if order >= 1:
        SO[1] = half
    for k in range(2, order + 1):
        SO[k] = -s[k] * half
    return O, PowerSeries(SO, "|z| < 1")


def series_R(order: int, exact: bool = False) -> PowerSeries:
    """Tail generating function R(z) = -1 + 1/sqrt(1 - z)."""
    _check_order(order)
    r = _inv_sqrt_one_minus_z(order, exact)
    return PowerSeries([r[0] * 0] + r[1:], "|z| < 1")


def series_E(mu, order: int, exact: bool = False) -> PowerSeries:
    """Generating function of E[mu^{N_t}] for the lazy-walk return count N_t."""
    if mu < 1:
        raise DomainError(f"mu = {mu} < 1 cannot arise (Cauchy-Schwarz gives mu >= 1)")
    _check_order(order)
    if exact:
        mu = Fraction(mu)
    inv_sqrt = PowerSeries(_inv_sqrt_one_minus_z(order, exact))
    denom = 1 - series_P(order, exact) * mu
    return PowerSeries((inv_sqrt * denom.reciprocal()).coeffs, f"|z| < 1/{float(mu):g}")


# -- brute-force lazy-walk oracles ---------------------------------------------

_LAZY_STEPS = ((-1, Fraction(1, 4)), (0, Fraction(1, 2)), (1, Fraction(1, 4)))


def lazy_walk_counts(n: int) -> dict:
    """Exact first-return, O and SO probabilities for times 0..n by dynamic programming.

    Independent of the closed forms: it propagates path weights over
    positions subject to the sign constraints.
    """
    first_return = [Fraction(0)] * (n + 1)
    O = [Fraction(0)] * (n + 1)
    SO = [Fraction(0)] * (n + 1)
    O[0] = Fraction(1)
    # free: never returned to 0 yet, any sign; nonneg: stayed >= 0; positive: stayed > 0
    free = {0: Fraction(1)}
    nonneg = {0: Fraction(1)}
    positive = {0: Fraction(1)}
    for k in range(1, n + 1):
        states = []
        for dist in (free, nonneg, positive):
            nxt = {}
            for pos, w in dist.items():
                for step, q in _LAZY_STEPS:
                    nxt[pos + step] = nxt.get(pos + step, 0) + w * q
            states.append(nxt)
        free, nonneg, positive = states
        first_return[k] = free.pop(0, Fraction(0))
        O[k] = nonneg.get(0, Fraction(0))
        nonneg = {p: w for p, w in nonneg.items() if p >= 0}
        SO[k] = positive.pop(0, Fraction(0))
        positive = {p: w for p, w in positive.items() if p > 0}
    return {"first_return": first_return, "O": O, "SO": SO}


def brute_intersections(t: int, mu: float, max_t: int = 14) -> tuple[float, float, float]:
    """(E[mu^N_t], E[N_t], E[N_t^2]) by enumerating all 3^t lazy paths.

    N_t counts visits to 0 at times 1..t.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t > max_t:
        raise CapacityError(f"3^{t} paths exceed the enumeration cap 3^{max_t}")
    if t == 0:
        return 1.0, 0.0, 0.0
    pos = np.zeros(1, dtype=np.int8)
    cnt = np.zeros(1, dtype=np.int8)
    wt = np.ones(1)
    steps = np.array([-1, 0, 1], dtype=np.int8)
    probs = np.array([0.25, 0.5, 0.25])
    for _ in range(t):
        pos = (pos[:, None] + steps[None, :]).ravel()
        wt = (wt[:, None] * probs[None, :]).ravel()
        cnt = np.repeat(cnt, 3) + (pos == 0)
    c = cnt.astype(float)
    return float(np.sum(wt * mu**c)), float(np.sum(wt * c)), float(np.sum(wt * c * c))


def sample_intersections(t: int, n: int, seed: int) -> np.ndarray:
    """Monte Carlo draws of N_t for the lazy walk (n independent paths)."""
    rng = np.random.default_rng(seed)
    out = np.zeros(n, dtype=np.int64)
    chunk = max(1, 2**22 // max(t, 1))
    done = 0
    while done < n:
        m = min(chunk, n - done)
        steps = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=(m, t), p=[0.25, 0.5, 0.25])
        pos = np.cumsum(steps, axis=1, dtype=np.int32)
        out[done : done + m] = (pos == 0).sum(axis=1)
        done += m
    return out


def mu_of(law: NoiseLaw, beta: float, N: int) -> float:
    """mu = m(2 theta) / m(theta)^2 with theta = beta N^{-1/4}."""
    theta = beta * N**-0.25
    mu = mgf(law, 2 * theta) / mgf(law, theta) ** 2
    if mu < 1 - 1e-12:
        raise AssertionError(f"mu = {mu} < 1 violates Cauchy-Schwarz")
    return float(mu)


def gf_identity_report(order: int = 20, mus=(1.0, 1.1, 2.0), brute_max_t: int = 12, tol: float = 1e-12) -> dict:
    """Check the lazy-walk generating-function identities coefficientwise.

    Covers the first terms of SO and O, the two functional equations tying
    SO and O together, E = mu E P + R + 1, the closed forms against the
    path-counting oracle and the coefficients of E against 3^t enumeration.
    """
    O, SO = series_O_SO(order, exact=True)
    P, R = series_P(order, exact=True), series_R(order, exact=True)
    z = PowerSeries([Fraction(0), Fraction(1)])
    z2 = z * z
    dp = lazy_walk_counts(order)

    def gap(lhs, rhs):
        return float(max(abs(a - b) for a, b in zip((lhs - rhs).truncate(order).coeffs, [0] * (order + 1))))

    checks = {
        "SO(1)": SO[1] == Fraction(1, 2),
        "SO(2)": SO[2] == Fraction(1, 16),
        "O(1)": O[1] == Fraction(1, 2),
        "O(2)": O[2] == Fraction(5, 16),
    }
    errors = {
        "SO = z^2 O / 16 + z / 2": gap(SO, z2 * O * Fraction(1, 16) + z * Fraction(1, 2)),
        "O = SO O + 1": gap(O, SO * O + 1),
        "O = z^2 O^2 / 16 + z O / 2 + 1": gap(O, z2 * O * O * Fraction(1, 16) + z * O * Fraction(1, 2) + 1),
        "P matches first returns": float(max(abs(P[k] - dp["first_return"][k]) for k in range(order + 1))),
        "O matches paths": float(max(abs(O[k] - dp["O"][k]) for k in range(order + 1))),
        "SO matches paths": float(max(abs(SO[k] - dp["SO"][k]) for k in range(order + 1))),
    }
    for mu in mus:
        E = series_E(mu, order)
        rhs = E * series_P(order) * mu + series_R(order) + 1
        errors[f"E = mu E P + R + 1 (mu={mu:g})"] = float(np.max(np.abs(np.array((E - rhs).truncate(order).coeffs, dtype=float))))
    brute = {}
    for mu in mus:
        E = series_E(mu, brute_max_t)
        brute[f"{mu:g}"] = float(max(abs(E[t] - brute_intersections(t, mu)[0]) for t in range(brute_max_t + 1)))
    ok = all(checks.values()) and all(v <= tol for v in errors.values()) and all(v <= 1e-10 for v in brute.values())
    return {"order": order, "exact_values": checks, "identity_errors": errors, "brute_force_E_errors": brute, "pass": ok}
