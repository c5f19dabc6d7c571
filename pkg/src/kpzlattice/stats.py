"""Ensembles of rescaled surfaces, KS tests and the invariance comparison.

Replicas are grown in batches, one lattice row at a time, with noise drawn on
the fly from the counter-based generator, so memory stays proportional to a
single row per replica and results do not depend on the batch size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import special, stats as sps

from .errors import BlowUpError, DesignError, SampleSizeError
from .lattice import grow_rows
from .noise import NoiseLaw, log_mgf, noise_values
from .renorm import compute_constants
from .scaling import barycentric
from .surface import GrowthRule, surface_update

__all__ = [
    "DEFAULT_PROBES",
    "ProbeSpec",
    "SystemSpec",
    "EnsembleSummary",
    "replica_seeds",
    "probe_samples",
    "run_ensemble",
    "ks_two_sample",
    "holm",
    "invariance_suite",
    "linear_variance",
]

DEFAULT_PROBES = ((0.0, 0.25), (0.0, 1.0), (0.5, 0.5), (-0.5, 1.0))
DEFAULT_BATCH = 256


@dataclass(frozen=True)
class ProbeSpec:
    points: tuple = DEFAULT_PROBES
    observable: str = "ftilde"

    def __post_init__(self):
        if self.observable not in ("ftilde", "exp_beta_ftilde"):
            raise ValueError("observable must be 'ftilde' or 'exp_beta_ftilde'")
        object.__setattr__(self, "points", tuple((float(x), float(t)) for x, t in self.points))
        for x, t in self.points:
            if t < 0:
                raise ValueError(f"probe time must be >= 0, got {t}")


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """One growth system: a rule with its drift, or the polymer reference.

    ``rule is None`` selects the polymer at inverse temperature ``beta``;
    its rescaled surface is f^poly itself (the log-mgf drift is built in
    and V = 0).  Otherwise the rule is grown without drift and the target
    drift from :func:`~kpzlattice.renorm.compute_constants` is subtracted.
    """

    law: NoiseLaw
    N: int
    rule: GrowthRule | None = None
    beta: float | None = None
    drift_mode: str = "cumulant"
    convention: str = "paper"
    v_form: str = "paper"
    label: str = ""

    @property
    def effective_beta(self) -> float:
        if self.rule is None:
            return float(self.beta)
        return self.rule.constants(self.convention)[0]

    def describe(self) -> dict:
        out = {"law": self.law.to_spec(), "N": self.N, "convention": self.convention}
        if self.rule is None:
            out.update(rule="polymer-reference", beta=self.beta)
        else:
            out.update(rule=self.rule.spec or self.rule.name, drift_mode=self.drift_mode, v_form=self.v_form)
        return out

    def name(self) -> str:
        if self.label:
            return self.label
        r = f"polymer(beta={self.beta:g})" if self.rule is None else self.rule.name
        return f"{r}/{self.law.family}"

    def per_step_adjust(self) -> float:
        """Height added per lattice step to turn grown heights into f~."""
        if self.rule is None:
            return 0.0
        const = compute_constants(self.rule, self.law, self.N, v_form=self.v_form, convention=self.convention)
        target = const.drift_cumulant_per_t if self.drift_mode == "cumulant" else const.drift_logmgf_per_t
        if target is None:
            raise ValueError("logmgf drift needs beta != 0")
        return self.rule.psi00 - target / self.N


def replica_seeds(seed0: int, n: int, stream=()) -> np.ndarray:
    """n replica seeds for the stream keyed by ``(seed0, *stream)``."""
    return np.random.SeedSequence([int(seed0), *[int(s) for s in stream]]).generate_state(n, dtype=np.uint64)


def _lattice_probes(points, N):
    out = []
    for x, t in points:
        corners, weights = barycentric(math.sqrt(N) * x, N * t)
        out.append([(cx, ct, w) for (cx, ct), w in zip(corners, weights) if w != 0.0])
    return out


def probe_samples(system: SystemSpec, probes: ProbeSpec, seeds: np.ndarray) -> np.ndarray:
    """f~ (or exp(beta f~)) at every probe for each seed; shape (len(seeds), n_probes)."""
    N = system.N
    lat = _lattice_probes(probes.points, N)
    need_rows = sorted({ct for corners in lat for _, ct, _ in corners})
    tmax = need_rows[-1]
    xreach = max(abs(cx) for corners in lat for cx, _, _ in corners)
    xmax = xreach + tmax
    seeds = np.asarray(seeds, dtype=np.uint64)
    B = len(seeds)
    xs = np.arange(-xmax, xmax + 1)
    law = system.law

    def noise(t, sites):
        return noise_values(law, seeds[:, None], xs[sites][None, :], t)

    if system.rule is None:
        beta = float(system.beta)
        inv, amp = 1.0 / beta, N**-0.25
        shift = inv * (math.log(2.0) + float(log_mgf(law, beta * amp)))

        def update(a, b, y, t, sites):
            return inv * np.logaddexp(beta * a, beta * b) + amp * y - shift

    else:
        update = surface_update(system.rule, N, 0.0, xmax)
    adj = system.per_step_adjust()
    kept = {}
    try:
        for t, row in grow_rows(update, noise, xmax, tmax, (B,)):
            if t in need_rows:
                kept[t] = row + adj * t
    except BlowUpError as exc:
        if exc.replica is not None:
            exc.seed = int(seeds[exc.replica[0]])
            exc.args = (f"{exc.args[0]} (replica seed {exc.seed})",)
        raise
    out = np.empty((B, len(lat)))
    for j, corners in enumerate(lat):
        out[:, j] = sum(w * kept[ct][:, cx + xmax] for cx, ct, w in corners)
    if probes.observable == "exp_beta_ftilde":
        out = np.exp(system.effective_beta * out)
    return out


@dataclass
class EnsembleSummary:
    """Samples per (system, probe) and their summary statistics."""

    systems: list
    probes: ProbeSpec
    n_replicas: int
    seed0: int
    samples: dict = field(default_factory=dict)
    ks: dict = field(default_factory=dict)

    def estimators(self) -> dict:
        out = {}
        for (name, j), s in self.samples.items():
            q = np.quantile(s, [0.25, 0.5, 0.75])
            out[f"{name}|{j}"] = {
                "probe": list(self.probes.points[j]),
                "count": int(s.size),
                "mean": float(np.mean(s)),
                "var": float(np.var(s, ddof=1)),
                "skew": float(sps.skew(s)),
                "quartiles": [float(v) for v in q],
                "stderr": float(np.std(s, ddof=1) / math.sqrt(s.size)),
            }
        return out

    def to_dict(self) -> dict:
        return {
            "n_replicas": self.n_replicas,
            "seed0": self.seed0,
            "probes": [list(p) for p in self.probes.points],
            "observable": self.probes.observable,
            "systems": [s.describe() | {"name": s.name()} for s in self.systems],
            "estimators": self.estimators(),
            "ks": {k: list(v) for k, v in self.ks.items()},
        }


def run_ensemble(
    system: SystemSpec,
    probes: ProbeSpec,
    replicas: int,
    seed0: int,
    stream=(),
    batch: int = DEFAULT_BATCH,
) -> EnsembleSummary:
    """Grow ``replicas`` independent copies and record the probe observables.

    Deterministic in (system, probes, replicas, seed0, stream); the batch
    size only affects memory and speed.
    """
    if replicas < 2:
        raise ValueError("an ensemble needs at least 2 replicas")
    seeds = replica_seeds(seed0, replicas, stream)
    chunks = [probe_samples(system, probes, seeds[i : i + batch]) for i in range(0, replicas, batch)]
    data = np.concatenate(chunks, axis=0)
    summary = EnsembleSummary([system], probes, replicas, seed0)
    for j in range(len(probes.points)):
        summary.samples[(system.name(), j)] = data[:, j]
    return summary


def ks_two_sample(a, b, min_size: int = 50) -> tuple[float, float]:
    """Two-sample KS statistic and its asymptotic p-value.

    The p-value uses the Kolmogorov distribution at
    ``(en + 0.12 + 0.11/en) D`` with ``en = sqrt(n m / (n + m))``.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    n, m = a.size, b.size
    if n < min_size or m < min_size:
        raise SampleSizeError(f"KS test needs at least {min_size} samples per side, got {n} and {m}")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / n
    cdf_b = np.searchsorted(b, grid, side="right") / m
    D = float(np.max(np.abs(cdf_a - cdf_b)))
    en = math.sqrt(n * m / (n + m))
    p = float(special.kolmogorov((en + 0.12 + 0.11 / en) * D))
    return D, min(1.0, max(0.0, p))


def holm(pvalues) -> np.ndarray:
    """Holm step-down adjusted p-values (same order as the input)."""
    p = np.asarray(pvalues, dtype=float)
    m = p.size
    order = np.argsort(p, kind="stable")
    adj = np.empty(m)
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, min(1.0, (m - rank) * p[i]))
        adj[i] = running
    return adj


def _check_design(systems):
    betas = {round(s.effective_beta, 12) for s in systems}
    mu2s = {round(s.law.mu[1], 12) for s in systems}
    if len(betas) > 1:
        raise DesignError(f"systems have different beta {sorted(betas)}; their limits differ")
    if len(mu2s) > 1:
        raise DesignError(f"noise laws have different mu2 {sorted(mu2s)}; their limits differ")


def invariance_suite(
    build,
    N_grid,
    probes: ProbeSpec,
    n: int,
    seed0: int = 0,
    alpha: float = 0.01,
    batch: int = DEFAULT_BATCH,
) -> dict:
    """Pairwise KS comparison of all systems at each N.

    ``build(N)`` returns the list of :class:`SystemSpec` for that N.  The
    verdict passes when every Holm-adjusted p-value at the largest N exceeds
    ``alpha`` and, if the grid has several N, the median pairwise D strictly
    decreases along it.
    """
    N_grid = sorted(N_grid)
    for N in N_grid:
        _check_design(build(N))
    per_N = {}
    for N in N_grid:
        systems = build(N)
        samples = []
        for i, s in enumerate(systems):
            seeds = replica_seeds(seed0, n, (i, N))
            chunks = [probe_samples(s, probes, seeds[k : k + batch]) for k in range(0, n, batch)]
            samples.append(np.concatenate(chunks, axis=0))
        tests = []
        for (i, a), (j, b) in combinations(enumerate(samples), 2):
            for k in range(len(probes.points)):
                D, p = ks_two_sample(a[:, k], b[:, k])
                tests.append({"pair": [systems[i].name(), systems[j].name()], "probe": list(probes.points[k]), "D": D, "p": p})
        adj = holm([t["p"] for t in tests]) if tests else np.array([])
        for t, q in zip(tests, adj):
            t["p_holm"] = float(q)
        per_N[N] = {
            "systems": [s.name() for s in systems],
            "tests": tests,
            "median_D": float(np.median([t["D"] for t in tests])) if tests else 0.0,
            "min_p_holm": float(adj.min()) if tests else 1.0,
            "means": {s.name(): [float(v) for v in x.mean(axis=0)] for s, x in zip(systems, samples)},
        }
    top = per_N[N_grid[-1]]
    ks_ok = top["min_p_holm"] > alpha
    meds = [per_N[N]["median_D"] for N in N_grid]
    trend_ok = all(b < a for a, b in zip(meds, meds[1:])) if len(meds) > 1 else True
    return {
        "N_grid": N_grid,
        "alpha": alpha,
        "n": n,
        "per_N": {str(N): v for N, v in per_N.items()},
        "median_D": meds,
        "ks_pass": bool(ks_ok),
        "trend_pass": bool(trend_ok),
        "verdict": "PASS" if ks_ok and trend_ok else "FAIL",
    }


def linear_variance(N: int, t: int, mu2: float) -> float:
    """Exact Var f(x, t) for the linear rule: N^{-1/2} mu2 sum_{r<t} sum_z p(z, r)^2."""
    r = np.arange(t)
    # sum_z p(z, r)^2 = C(2r, r) / 4^r, in log space to avoid overflow
    logs = special.gammaln(2 * r + 1) - 2 * special.gammaln(r + 1) - r * math.log(4.0)
    return float(mu2 * np.sum(np.exp(logs)) / math.sqrt(N))
