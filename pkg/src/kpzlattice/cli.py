"""Command-line driver: ``kpzlattice <command> --config cfg.yaml``.

Configs are YAML (JSON also parses).  Minimal example::

    rule: kpz-quadratic
    law: rademacher
    N: 64

Rules are a name, or a mapping ``{name: custom, expr: "...", beta: ...}``;
laws are a family name or a mapping such as ``{family: uniform, halfwidth: 1.732}``.
``rule``, ``law`` and ``N`` may be lists where a command sweeps them
(``couple``, ``renorm-check`` and ``invariance``).

Exit codes: 0 success, 2 invalid config or design, 3 numerical blow-up,
4 capacity exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import BlowUpError, CapacityError, ConfigError, DesignError, InadmissibleRuleError, KPZError
from .noise import law_from_spec, sample_sheet
from .renorm import compute_constants, expected_y, k_from_sheet, y_field, y_flatness_report
from .scaling import coupling_delta, ratio_vs_K_diagnostic, rescale
from .stats import DEFAULT_PROBES, ProbeSpec, SystemSpec, invariance_suite, replica_seeds
from .surface import CONVENTIONS, DRIFT_MODES, RULE_NAMES, grow, named_rule
from .walk_kernel import constants_c1_c2, gf_identity_report

__all__ = ["ExperimentConfig", "parse_config", "run", "main", "COMMANDS"]

COMMANDS = ("constants", "gf-check", "simulate", "couple", "renorm-check", "invariance")
EXIT_OK, EXIT_INVALID, EXIT_BLOWUP, EXIT_CAPACITY = 0, 2, 3, 4


@dataclass
class ExperimentConfig:
    command: str
    rule: object
    law: object
    N: object
    a: float = 1.0
    b: float = 1.0
    epsilon: float = 0.008
    replicas: int = 100
    seed0: int = 0
    horizon: int = 10_000
    drift_mode: str = "cumulant"
    convention: str = "paper"
    v_form: str = "paper"
    probes: list = field(default_factory=lambda: [list(p) for p in DEFAULT_PROBES])
    observable: str = "ftilde"
    alpha: float = 0.01
    order: int = 20
    csv: bool = False
    batch: int = 64
    out: str = "out"

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    # -- resolved objects --

    @property
    def N_list(self) -> list[int]:
        return list(self.N) if isinstance(self.N, list) else [self.N]

    @property
    def rule_list(self) -> list:
        return list(self.rule) if isinstance(self.rule, list) else [self.rule]

    @property
    def law_list(self) -> list:
        return list(self.law) if isinstance(self.law, list) else [self.law]


def _rule_args(spec) -> dict:
    if isinstance(spec, str):
        return {"name": spec}
    if isinstance(spec, dict):
        return dict(spec)
    raise ValueError(f"rule must be a name or a mapping, got {spec!r}")


def build_rule(spec):
    args = _rule_args(spec)
    name = args.pop("name", None)
    unknown = set(args) - {"beta", "expr", "radius"}
    if unknown:
        raise ValueError(f"unknown rule keys {sorted(unknown)}")
    return named_rule(name, **args)


_LIST_OK = {"couple", "renorm-check", "invariance"}


def parse_config(text: str, command: str | None = None) -> ExperimentConfig:
    """Parse and validate a config document; all problems are reported together."""
    try:
        raw = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError([f"config is not valid YAML/JSON: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a mapping of keys to values"])
    errors = []
    raw = dict(raw)
    if command is not None:
        if raw.get("command", command) != command:
            errors.append(f"command: config says {raw['command']!r} but {command!r} was requested")
        raw["command"] = command
    known = {f.name for f in fields(ExperimentConfig)}
    for key in sorted(set(raw) - known):
        errors.append(f"{key}: unknown field")
    cmd = raw.get("command")
    if cmd not in COMMANDS:
        errors.append(f"command: must be one of {COMMANDS}, got {cmd!r}")
    if cmd == "gf-check":
        for key in ("rule", "law", "N"):
            raw.setdefault(key, None)
    for key in ("rule", "law", "N"):
        if key not in raw:
            errors.append(f"{key}: required")
    values = {k: v for k, v in raw.items() if k in known}
    defaults = ExperimentConfig(command="", rule=None, law=None, N=None)
    for f in fields(ExperimentConfig):
        values.setdefault(f.name, getattr(defaults, f.name))
    cfg = ExperimentConfig(**values)
    if cmd != "gf-check":
        _validate(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _validate(cfg: ExperimentConfig, errors: list):
    multi = cfg.command in _LIST_OK
    for key in ("rule", "law", "N"):
        if isinstance(getattr(cfg, key), list) and not multi:
            errors.append(f"{key}: a list is only allowed for {sorted(_LIST_OK)}")
    for n in cfg.N_list if cfg.N is not None else []:
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            errors.append(f"N: must be a positive integer, got {n!r}")
    if cfg.N is not None and isinstance(cfg.N, list) and not cfg.N:
        errors.append("N: empty list")
    for spec in cfg.rule_list if cfg.rule is not None else []:
        try:
            args = _rule_args(spec)
            name = args.get("name")
            if name not in RULE_NAMES:
                errors.append(f"rule: unknown rule {name!r}; expected one of {RULE_NAMES}")
                continue
            if name == "polymer" and args.get("beta") in (None, 0):
                errors.append("rule: polymer needs a nonzero beta")
                continue
            if name == "custom" and not args.get("expr"):
                errors.append("rule: custom needs expr")
                continue
            if not (cfg.command == "invariance" and name == "polymer"):
                build_rule(spec)
        except (ValueError, InadmissibleRuleError, ArithmeticError) as exc:
            errors.append(f"rule: {exc}")
    for spec in cfg.law_list if cfg.law is not None else []:
        try:
            law_from_spec(spec)
        except (ValueError, TypeError, KeyError) as exc:
            errors.append(f"law: {exc}")
    if not isinstance(cfg.epsilon, (int, float)) or not 0 < cfg.epsilon <= 0.3:
        errors.append(f"epsilon: must lie in (0, 0.3], got {cfg.epsilon!r}")
    if not isinstance(cfg.replicas, int) or cfg.replicas < 2:
        errors.append(f"replicas: must be an integer >= 2, got {cfg.replicas!r}")
    if not isinstance(cfg.seed0, int) or cfg.seed0 < 0:
        errors.append(f"seed0: must be a nonnegative integer, got {cfg.seed0!r}")
    if not isinstance(cfg.horizon, int) or cfg.horizon < 1:
        errors.append(f"horizon: must be a positive integer, got {cfg.horizon!r}")
    for key in ("a", "b"):
        v = getattr(cfg, key)
        if not isinstance(v, (int, float)) or v <= 0:
            errors.append(f"{key}: must be positive, got {v!r}")
    if cfg.drift_mode not in ("cumulant", "logmgf", "none"):
        errors.append(f"drift_mode: must be one of {DRIFT_MODES}")
    if cfg.convention not in CONVENTIONS:
        errors.append(f"convention: must be one of {CONVENTIONS}")
    if cfg.v_form not in ("paper", "wick"):
        errors.append("v_form: must be 'paper' or 'wick'")
    if cfg.observable not in ("ftilde", "exp_beta_ftilde"):
        errors.append("observable: must be 'ftilde' or 'exp_beta_ftilde'")
    if not isinstance(cfg.alpha, (int, float)) or not 0 < cfg.alpha < 1:
        errors.append("alpha: must lie in (0, 1)")
    try:
        ProbeSpec(tuple(tuple(p) for p in cfg.probes), cfg.observable if cfg.observable in ("ftilde", "exp_beta_ftilde") else "ftilde")
    except (ValueError, TypeError) as exc:
        errors.append(f"probes: {exc}")
    if not isinstance(cfg.batch, int) or cfg.batch < 1:
        errors.append("batch: must be a positive integer")


# -- commands -----------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def cmd_constants(cfg: ExperimentConfig) -> dict:
    rule, law = build_rule(cfg.rule), law_from_spec(cfg.law)
    N = cfg.N_list[0]
    rc = compute_constants(rule, law, N, cfg.horizon, cfg.v_form, cfg.convention)
    out = {
        "rule": {"name": rule.name, "beta": rule.beta, "d4": rule.d4, "c": rule.c, "psi00": rule.psi00, "c_eff": rule.c_eff},
        "kernel": constants_c1_c2(cfg.horizon).as_dict(),
        "constants": rc.as_dict(),
    }
    if rc.drift_logmgf_per_t is not None:
        out["drift_gap_per_t"] = rc.drift_logmgf_per_t - rc.drift_cumulant_per_t
    return out


def cmd_gf_check(cfg: ExperimentConfig) -> dict:
    return gf_identity_report(cfg.order)


def _window_cols(xmax, X):
    return slice(xmax - X, xmax + X + 1)


def cmd_simulate(cfg: ExperimentConfig, out_dir: Path) -> dict:
    rule, law = build_rule(cfg.rule), law_from_spec(cfg.law)
    N = cfg.N_list[0]
    X, T = int(round(cfg.a * N)), int(round(cfg.b * N))
    consts = compute_constants(rule, law, N, cfg.horizon, cfg.v_form, cfg.convention)
    probes = ProbeSpec(tuple(tuple(p) for p in cfg.probes), cfg.observable)
    seeds = replica_seeds(cfg.seed0, cfg.replicas)
    rows = []
    first = None
    for i in range(0, len(seeds), cfg.batch):
        batch = seeds[i : i + cfg.batch]
        sheet = sample_sheet(law, batch, X + T, T)
        surf = grow(rule, sheet, N, "none", convention=cfg.convention)
        mode = "logmgf" if cfg.drift_mode == "logmgf" and consts.beta != 0 else "cumulant"
        rs = rescale(surf, consts, mode)
        win = surf.heights[..., : T + 1, _window_cols(X + T, X)]
        probe_vals = {}
        for x, t in probes.points:
            try:
                probe_vals[f"{x:g},{t:g}"] = np.atleast_1d(rs(x, t))
            except KPZError:
                probe_vals[f"{x:g},{t:g}"] = None
        for j, s in enumerate(batch):
            rows.append({
                "seed": int(s),
                "sup_abs_f": float(np.nanmax(np.abs(win[j]))),
                "mean_f_final": float(np.nanmean(win[j, T])),
                "ftilde": {k: (None if v is None else float(v[j])) for k, v in probe_vals.items()},
            })
        if first is None:
            first = win[0]
    if cfg.csv:
        with open(out_dir / "simulate_surface.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "t", "f"])
            for t in range(first.shape[0]):
                for k in range(first.shape[1]):
                    v = first[t, k]
                    if not np.isnan(v):
                        w.writerow([k - X, t, repr(float(v))])
    return {"N": N, "window": [X, T], "constants": consts.as_dict(), "replicas": rows}


def cmd_couple(cfg: ExperimentConfig) -> dict:
    rows = []
    for rspec in cfg.rule_list:
        rule = build_rule(rspec)
        for lspec in cfg.law_list:
            law = law_from_spec(lspec)
            for N in cfg.N_list:
                seeds = replica_seeds(cfg.seed0, cfg.replicas, (N,))
                for i in range(0, len(seeds), cfg.batch):
                    batch = seeds[i : i + cfg.batch]
                    cf = coupling_delta(rule, law, N, batch, cfg.a, cfg.b, cfg.epsilon, cfg.convention)
                    X, T = cf.window
                    xm = cf.xmax
                    probes = [(x, t) for t in range(1, T + 1) for x in range(-X + 1, X, 1) if (x + t) % 2 and abs(x) + t + cf.k.lags + 2 <= xm]
                    diag = ratio_vs_K_diagnostic(cf.poly, cf.k, probes[:: max(1, len(probes) // 400)])
                    c = rule.constants(cfg.convention)[1]
                    flat = y_flatness_report(y_field(cf.k, c, cf.beta_poly), range(-X, X + 1), range(0, T))
                    for j, s in enumerate(batch):
                        rows.append({
                            "rule": rule.spec, "law": law.to_spec(), "N": N, "seed": int(s),
                            "sup_delta": float(cf.sup_delta[j]),
                            "sup_r_minus_K": float(diag["sup_r_minus_K"][j]),
                            "sup_Y_dev": float(flat["sup_dev"][j]),
                            "sup_Y_diff": float(flat["sup_diff"][j]),
                        })
    medians = {}
    for r in rows:
        key = f"{r['rule'].get('rule')}|{r['law']['family']}|{r['N']}"
        medians.setdefault(key, []).append(r["sup_delta"])
    return {"rows": rows, "median_sup_delta": {k: float(np.median(v)) for k, v in medians.items()}}


def cmd_renorm_check(cfg: ExperimentConfig) -> dict:
    out = []
    for rspec in cfg.rule_list:
        rule = build_rule(rspec)
        beta, c = rule.constants(cfg.convention)
        for lspec in cfg.law_list:
            law = law_from_spec(lspec)
            for N in cfg.N_list:
                T = int(round(cfg.b * N))
                X = int(round(cfg.a * N))
                seeds = replica_seeds(cfg.seed0, cfg.replicas, (N,))
                ys, devs, diffs = [], [], []
                for i in range(0, len(seeds), cfg.batch):
                    sheet = sample_sheet(law, seeds[i : i + cfg.batch], X + T + 8, T)
                    y = y_field(k_from_sheet(sheet, beta, N, cfg.epsilon), c, beta)
                    probe_x = 0 if T % 2 else 1
                    ys.append(y.values[:, T, probe_x + y.xmax])
                    rep = y_flatness_report(y, range(-X, X + 1), range(0, T + 1))
                    devs.append(rep["sup_dev"])
                    diffs.append(rep["sup_diff"])
                ys = np.concatenate(ys)
                consts = compute_constants(rule, law, N, cfg.horizon, cfg.v_form, cfg.convention)
                out.append({
                    "rule": rule.spec, "law": law.to_spec(), "N": N, "t": T,
                    "mean_Y": float(ys.mean()), "stderr_Y": float(ys.std(ddof=1) / math.sqrt(ys.size)),
                    "exact_E_Y": expected_y(rule, law, N, T, cfg.epsilon, "wick", cfg.convention),
                    "single_pairing_E_Y": expected_y(rule, law, N, T, cfg.epsilon, "paper", cfg.convention),
                    "V_t_over_N": consts.V * T / N, "V_wick_t_over_N": consts.V_wick * T / N,
                    "median_sup_dev": float(np.median(np.concatenate(devs))),
                    "median_sup_diff": float(np.median(np.concatenate(diffs))),
                })
    return {"results": out}


def _invariance_builder(cfg: ExperimentConfig):
    def build(N):
        systems = []
        for rspec in cfg.rule_list:
            args = _rule_args(rspec)
            for lspec in cfg.law_list:
                law = law_from_spec(lspec)
                if args.get("name") == "polymer":
                    systems.append(SystemSpec(law, N, None, float(args["beta"]), convention=cfg.convention))
                else:
                    rule = build_rule(rspec)
                    systems.append(SystemSpec(law, N, rule, drift_mode=cfg.drift_mode if cfg.drift_mode != "none" else "cumulant",
                                              convention=cfg.convention, v_form=cfg.v_form,
                                              label=f"{rule.spec.get('expr', rule.name)}/{law.family}"))
        return systems

    return build


def cmd_invariance(cfg: ExperimentConfig) -> dict:
    probes = ProbeSpec(tuple(tuple(p) for p in cfg.probes), cfg.observable)
    return invariance_suite(_invariance_builder(cfg), cfg.N_list, probes, cfg.replicas, cfg.seed0, cfg.alpha, cfg.batch)


def run(cfg: ExperimentConfig, out_dir: str | os.PathLike | None = None) -> int:
    """Execute a validated config; writes ``<out>/<command>.json`` and returns an exit code."""
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"version": __version__, "command": cfg.command, "config": cfg.to_dict()}
    code = EXIT_OK
    try:
        if cfg.command == "constants":
            doc["result"] = cmd_constants(cfg)
        elif cfg.command == "gf-check":
            doc["result"] = cmd_gf_check(cfg)
        elif cfg.command == "simulate":
            doc["result"] = cmd_simulate(cfg, out)
        elif cfg.command == "couple":
            doc["result"] = cmd_couple(cfg)
        elif cfg.command == "renorm-check":
            doc["result"] = cmd_renorm_check(cfg)
        elif cfg.command == "invariance":
            doc["result"] = cmd_invariance(cfg)
    except (DesignError, ConfigError) as exc:
        doc["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_INVALID
    except BlowUpError as exc:
        doc["error"] = {"type": "BlowUpError", "message": str(exc), "x": exc.x, "t": exc.t, "seed": exc.seed}
        code = EXIT_BLOWUP
    except CapacityError as exc:
        doc["error"] = {"type": "CapacityError", "message": str(exc)}
        code = EXIT_CAPACITY
    doc["exit_code"] = code
    path = out / f"{cfg.command}.json"
    path.write_text(json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n")
    if "error" in doc:
        print(f"{doc['error']['type']}: {doc['error']['message']}", file=sys.stderr)
    else:
        print(str(path))
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kpzlattice", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="YAML or JSON config file")
    parser.add_argument("--seed", type=int, help="override seed0")
    parser.add_argument("--threads", type=int, default=1, help="cap on worker threads (numerical libraries)")
    parser.add_argument("--out", help="output directory (default: config 'out' or ./out)")
    args = parser.parse_args(argv)
    if args.threads and args.threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(args.threads))
    text = Path(args.config).read_text() if args.config else ""
    try:
        cfg = parse_config(text, args.command)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        if args.seed < 0:
            print("config error: --seed must be nonnegative", file=sys.stderr)
            return EXIT_INVALID
        cfg.seed0 = args.seed
    try:
        return run(cfg, args.out)
    except CapacityError as exc:
        print(f"CapacityError: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
