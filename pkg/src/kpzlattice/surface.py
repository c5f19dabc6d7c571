"""Growth rules and the generic surface recursion.

A rule psi(u, v) that is shift-equivariant and symmetric reduces to
``psi(u, v) = (u+v)/2 + phi(u-v)`` with ``phi(u) = psi(u/2, -u/2)``.  The
engine evolves ``f(x,t) = (a+b)/2 + phi(b-a) + N^{-1/4} y(x,t) - drift``
with ``a = f(x-1,t-1)``, ``b = f(x+1,t-1)``, always after subtracting
psi(0,0) from phi, so heights are the psi(0,0)-normalised surface.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import BlowUpError, DerivativeError, InadmissibleRuleError
from .lattice import check_site, grow_rows
from .noise import NoiseLaw, NoiseSheet, log_mgf

__all__ = [
    "GrowthRule",
    "SurfaceField",
    "make_rule",
    "named_rule",
    "parse_expression",
    "phi_derivatives",
    "phi_table_check",
    "step_drift",
    "surface_update",
    "grow",
    "RULE_NAMES",
    "CONVENTIONS",
]

RULE_NAMES = ("kpz-quadratic", "kpz-sqrt", "polymer", "linear", "custom")
VALIDATION_HALFWIDTH = 0.5


CONVENTIONS = ("paper", "lse")


@dataclass(frozen=True, eq=False)
class GrowthRule:
    """A validated growth rule with its extracted constants.

    ``beta = d1^2 psi(0,0) = phi''(0)``, ``d4 = d1^4 psi(0,0)`` and
    ``c = d4/24 + beta^3/12``.  ``phi`` already has psi(0,0) subtracted
    (``phi(0) == 0``); ``radius`` is the largest |phi argument| the rule is
    trusted on during growth.

    Under the ``"lse"`` convention the rule is paired with the polymer at
    inverse temperature ``4 beta``, the rule whose log-sum-exp recursion has
    the same second derivative; see :meth:`constants`.
    """

    name: str
    psi: Callable
    phi: Callable
    beta: float
    d4: float
    c: float
    psi00: float
    radius: float = VALIDATION_HALFWIDTH
    spec: dict = field(default_factory=dict)

    def raw_phi(self, u):
        """psi(u/2, -u/2) without the psi(0,0) normalisation."""
        return self.phi(u) + self.psi00

    @property
    def beta_eff(self) -> float:
        return 4.0 * self.beta

    @property
    def c_eff(self) -> float:
        """Fourth-order mismatch against the log-sum-exp polymer at ``beta_eff``."""
        return self.d4 / 24 + self.beta_eff**3 / 192

    def constants(self, convention: str = "paper") -> tuple[float, float]:
        """(beta, c) driving drifts, V and Y under the given convention."""
        if convention == "paper":
            return self.beta, self.c
        if convention == "lse":
            return self.beta_eff, self.c_eff
        raise ValueError(f"convention must be one of {CONVENTIONS}")


# -- expression grammar ---------------------------------------------------------

_FUNCS = {
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "tanh": np.tanh,
    "abs": np.abs,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _compile(node):
    if isinstance(node, ast.Expression):
        return _compile(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        val = float(node.value)
        return lambda u, v: val
    if isinstance(node, ast.Name):
        if node.id == "u":
            return lambda u, v: u
        if node.id == "v":
            return lambda u, v: v
        if node.id in _CONSTS:
            val = _CONSTS[node.id]
            return lambda u, v: val
        raise ValueError(f"unknown name {node.id!r}; variables are u and v")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op, left, right = _BINOPS[type(node.op)], _compile(node.left), _compile(node.right)
        return lambda u, v: op(left(u, v), right(u, v))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand)
        if isinstance(node.op, ast.USub):
            return lambda u, v: -inner(u, v)
        return inner
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if len(node.args) != 1 or node.keywords:
            raise ValueError(f"{node.func.id} takes exactly one argument")
        fn, arg = _FUNCS[node.func.id], _compile(node.args[0])
        return lambda u, v: fn(arg(u, v))
    raise ValueError(f"unsupported syntax in rule expression: {ast.dump(node)[:60]}")


def parse_expression(text: str) -> Callable:
    """Compile a psi(u, v) expression over + - * / ^ ** and sqrt/exp/log/cosh/sinh/tanh/abs."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse rule expression {text!r}: {exc.msg}") from None
    fn = _compile(tree)

    def psi(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        out = np.broadcast_to(fn(u, v), np.broadcast_shapes(u.shape, v.shape))
        return float(out) if out.ndim == 0 else np.array(out)

    return psi


# -- derivatives ------------------------------------------------------------------

# central-difference stencils: offsets -> weights, and the power of h to divide by
_STENCILS = {
    1: ({1: 0.5, -1: -0.5}, 1),
    2: ({1: 1.0, 0: -2.0, -1: 1.0}, 2),
    3: ({2: 0.5, 1: -1.0, -1: 1.0, -2: -0.5}, 3),
    4: ({2: 1.0, 1: -4.0, 0: 6.0, -1: -4.0, -2: 1.0}, 4),
    5: ({3: 0.5, 2: -2.0, 1: 2.5, -1: -2.5, -2: 2.0, -3: -0.5}, 5),
}
_STEPS = tuple(2.0**-k for k in range(4, 10))


def _central(phi, order, h):
    weights, power = _STENCILS[order]
    return sum(w * float(phi(k * h)) for k, w in weights.items()) / h**power


def _richardson(phi, order, h):
    """Three-level Richardson on steps h, h/2, h/4 (kills the h^2 and h^4 terms)."""
    d = [_central(phi, order, h / 2**j) for j in range(3)]
    r1 = [(4 * d[j + 1] - d[j]) / 3 for j in range(2)]
    return (16 * r1[1] - r1[0]) / 15


def phi_derivatives(phi, orders=(1, 2, 3, 4, 5), tol: float = 1e-5) -> dict:
    """Richardson-extrapolated derivatives of phi at 0.

    Each order is estimated from two staggered step ladders drawn from
    2^-4..2^-9; disagreement beyond ``tol`` (relative to max(1, |value|))
    raises :class:`DerivativeError`.
    """
    out = {}
    for k in orders:
        # higher orders lose more to roundoff, so they use the coarser end of the ladder
        h0 = _STEPS[0] if k >= 3 else _STEPS[1]
        a = _richardson(phi, k, h0)
        b = _richardson(phi, k, h0 / 2)
        if abs(a - b) > tol * max(1.0, abs(a)):
            raise DerivativeError(f"phi^({k})(0): Richardson ladders disagree ({a!r} vs {b!r})")
        out[k] = a
    return out


def phi_table_check(rule: GrowthRule) -> dict:
    """Finite-difference phi^(1..5)(0) against the table implied by beta and c."""
    est = phi_derivatives(rule.phi, tol=math.inf)
    expected = {1: 0.0, 2: rule.beta, 3: 0.0, 4: -2 * rule.beta**3 + 24 * rule.c, 5: 0.0}
    return {
        "rule": rule.name,
        "phi0": float(rule.phi(0.0)),
        "estimates": est,
        "expected": expected,
        "deviation": {k: abs(est[k] - expected[k]) for k in est},
    }


# -- rule construction --------------------------------------------------------------


def _validate(psi, phi, name):
    g = np.linspace(-VALIDATION_HALFWIDTH, VALIDATION_HALFWIDTH, 11)
    u, v = np.meshgrid(g, g)
    with np.errstate(all="ignore"):
        base = np.asarray(psi(u, v), dtype=float)
        if not np.all(np.isfinite(base)):
            raise InadmissibleRuleError(f"{name}: psi is not finite on the validation grid")
        for h in (-1.25, -0.3, 0.45, 2.0):
            err = np.max(np.abs(np.asarray(psi(u + h, v + h)) - base - h))
            if not err <= 1e-10:
                raise InadmissibleRuleError(f"{name}: shift equivariance fails by {err:.3g} at shift {h}")
        err = np.max(np.abs(np.asarray(psi(v, u)) - base))
        if not err <= 1e-12:
            raise InadmissibleRuleError(f"{name}: psi is not symmetric (error {err:.3g})")
        err = np.max(np.abs(np.asarray(psi(g / 2, -g / 2)) - (np.asarray(psi(g, 0 * g)) - g / 2)))
        if not err <= 1e-10:
            raise InadmissibleRuleError(f"{name}: phi(u) = psi(u,0) - u/2 fails by {err:.3g}")


def make_rule(
    psi: Callable,
    beta: float | None = None,
    d4: float | None = None,
    *,
    name: str = "custom",
    phi: Callable | None = None,
    radius: float = VALIDATION_HALFWIDTH,
    spec: dict | None = None,
) -> GrowthRule:
    """Validate psi and extract beta, d4 = d1^4 psi(0,0) and c = d4/24 + beta^3/12.

    Pass ``beta`` and ``d4`` for analytic values; otherwise both come from
    finite differences of phi (``beta = phi''(0)``, ``d4 = phi''''(0)``).
    ``phi`` may be supplied in closed form; it must agree with psi.
    """
    psi00 = float(psi(0.0, 0.0))
    if phi is None:

        def phi(u):
            u = np.asarray(u, dtype=float)
            return psi(u / 2, -u / 2) - psi00

    _validate(psi, phi, name)
    g = np.linspace(-VALIDATION_HALFWIDTH, VALIDATION_HALFWIDTH, 21)
    err = np.max(np.abs(np.asarray(phi(g)) + psi00 - np.asarray(psi(g / 2, -g / 2))))
    if not err <= 1e-10:
        raise InadmissibleRuleError(f"{name}: supplied phi disagrees with psi by {err:.3g}")
    if beta is None or d4 is None:
        est = phi_derivatives(phi, orders=(2, 4))
        beta = est[2] if beta is None else beta
        d4 = est[4] if d4 is None else d4
    beta, d4 = float(beta), float(d4)
    c = d4 / 24 + beta**3 / 12
    return GrowthRule(name, psi, phi, beta, d4, c, psi00, float(radius), dict(spec or {}))


def _logcosh(z):
    a = np.abs(z)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def named_rule(name: str, *, beta: float | None = None, expr: str | None = None, radius: float | None = None) -> GrowthRule:
    """Rules by config name.

    ``polymer`` needs ``beta`` (the inverse temperature) and is the rule
    ``psi(u, v) = log((e^{beta u} + e^{beta v}) / 2) / beta`` of the
    log-sum-exp recursion, so its ``rule.beta`` is ``beta / 4``.  ``custom``
    needs ``expr`` and takes ``beta`` optionally (otherwise extracted).
    The polymer and linear rules are monotone on all of R and get an
    infinite radius; the others default to 0.5.
    """
    if name == "kpz-quadratic":
        psi = lambda u, v: (np.asarray(u) + v) / 2 + (np.asarray(u) - v) ** 2
        rule = make_rule(psi, 2.0, 0.0, name=name, phi=lambda u: np.asarray(u, dtype=float) ** 2)
    elif name == "kpz-sqrt":
        psi = lambda u, v: (np.asarray(u) + v) / 2 + np.sqrt(1 + (np.asarray(u) - v) ** 2)
        # rationalised form avoids cancellation near 0
        phi = lambda u: np.asarray(u, dtype=float) ** 2 / (np.sqrt(1 + np.asarray(u, dtype=float) ** 2) + 1)
        rule = make_rule(psi, 1.0, -3.0, name=name, phi=phi)
    elif name == "linear":
        psi = lambda u, v: (np.asarray(u) + v) / 2
        rule = make_rule(psi, 0.0, 0.0, name=name, phi=lambda u: 0.0 * np.asarray(u, dtype=float), radius=math.inf)
    elif name == "polymer":
        if beta is None or beta == 0:
            raise ValueError("polymer rule needs a nonzero beta")
        b = float(beta)
        phi = lambda u: _logcosh(0.5 * b * np.asarray(u, dtype=float)) / b
        psi = lambda u, v: (np.asarray(u) + v) / 2 + _logcosh(0.5 * b * (np.asarray(u) - v)) / b
        rule = make_rule(psi, b / 4, -(b**3) / 8, name=name, phi=phi, radius=math.inf)
    elif name == "custom":
        if not expr:
            raise ValueError("custom rule needs an expression")
        rule = make_rule(parse_expression(expr), beta, None, name=name)
    else:
        raise ValueError(f"unknown rule {name!r}; expected one of {RULE_NAMES}")
    if radius is not None:
        rule = replace(rule, radius=float(radius))
    spec = {"rule": name}
    if name in ("polymer", "custom"):
        spec["beta"] = beta
    if name == "custom":
        spec["expr"] = expr
    if radius is not None:
        spec["radius"] = float(radius)
    return replace(rule, spec=spec)


# -- growth ------------------------------------------------------------------------

DRIFT_MODES = ("none", "cumulant", "logmgf")


def step_drift(rule: GrowthRule, law: NoiseLaw, N: int, mode: str, convention: str = "paper") -> float:
    """Deterministic height subtracted at every lattice step.

    ``logmgf`` is ``log m(beta N^{-1/4}) / beta``; ``cumulant`` is its
    four-moment expansion.  Neither includes V, which only enters the
    rescaled surface.
    """
    if mode == "none":
        return 0.0
    beta, _ = rule.constants(convention)
    if mode == "logmgf":
        if beta == 0:
            # the beta -> 0 limit of beta^{-1} log m(beta N^{-1/4}) is zero for mean-zero noise
            return 0.0
        return float(log_mgf(law, beta * N**-0.25)) / beta
    if mode == "cumulant":
        _, m2, m3, m4 = law.mu
        return (0.5 * beta * N**0.5 * m2 + beta**2 * N**0.25 * m3 / 6 + beta**3 * (m4 - 3 * m2**2) / 24) / N
    raise ValueError(f"drift_mode must be one of {DRIFT_MODES}")


def surface_update(rule: GrowthRule, N: int, drift: float, xmax: int):
    """Row update for :func:`grow_rows` implementing the phi recursion."""
    amp = N**-0.25
    radius = rule.radius
    phi = rule.phi

    def update(a, b, y, t, sites):
        d = b - a
        if math.isfinite(radius):
            bad = np.abs(d) > radius
            if bad.any():
                idx = np.unravel_index(np.argmax(bad), bad.shape)
                x = sites.start + sites.step * idx[-1] - xmax
                raise BlowUpError(
                    f"phi argument {d[idx]:.4g} exceeds radius {radius} at (x={x}, t={t - 1}->{t}); "
                    "N is too small for this rule",
                    x=x,
                    t=t,
                    value=float(d[idx]),
                    replica=idx[:-1] if len(idx) > 1 else None,
                )
        out = 0.5 * (a + b) + phi(d) + amp * y - drift
        if not np.all(np.isfinite(out)):
            raise BlowUpError(f"non-finite height at t={t}", t=t)
        return out

    return update


@dataclass(frozen=True, eq=False)
class SurfaceField:
    """Heights on the even sublattice of ``|x| <= xmax, 0 <= t <= tmax``.

    ``heights`` has shape ``(*batch, tmax+1, 2*xmax+1)``; sites with ``x+t``
    odd or ``|x| + t > xmax`` are NaN.
    """

    N: int
    heights: np.ndarray
    rule: GrowthRule
    drift_mode: str
    seed: object
    law: NoiseLaw
    xmax: int
    tmax: int
    drift_per_step: float = 0.0

    def at(self, x: int, t: int):
        check_site(self.xmax, self.tmax, x, t)
        return self.heights[..., t, x + self.xmax]


def grow(
    rule: GrowthRule,
    noise: NoiseSheet,
    N: int,
    drift_mode: str = "none",
    initial=0.0,
    convention: str = "paper",
) -> SurfaceField:
    """Evolve the surface over the sheet's box.

    Values are exact for ``|x| + t <= noise.xmax``; to get a window
    ``|x| <= X`` up to time T, sample the sheet with ``xmax = X + T``.
    """
    drift = step_drift(rule, noise.law, N, drift_mode, convention)
    batch = noise.values.shape[:-2]
    out = np.empty(batch + (noise.tmax + 1, 2 * noise.xmax + 1))
    vals = noise.values
    rows = grow_rows(
        surface_update(rule, N, drift, noise.xmax),
        lambda t, sites: vals[..., t, sites],
        noise.xmax,
        noise.tmax,
        batch,
        initial,
    )
    for t, row in rows:
        out[..., t, :] = row
    return SurfaceField(N, out, rule, drift_mode, noise.seed, noise.law, noise.xmax, noise.tmax, drift)
