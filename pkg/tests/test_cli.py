import json

import pytest
import yaml

from kpzlattice import __version__
from kpzlattice.cli import ExperimentConfig, main, parse_config, run
from kpzlattice.errors import ConfigError


def test_minimal_config_defaults():
    cfg = parse_config("rule: kpz-quadratic\nlaw: rademacher\nN: 64\n", "simulate")
    assert cfg.command == "simulate" and cfg.epsilon == 0.008 and cfg.replicas == 100
    assert cfg.seed0 == 0 and cfg.a == cfg.b == 1.0


def test_required_fields():
    with pytest.raises(ConfigError) as err:
        parse_config("law: rademacher\n", "simulate")
    assert any(e.startswith("rule") for e in err.value.errors)
    assert any(e.startswith("N") for e in err.value.errors)


def test_epsilon_bound_named():
    with pytest.raises(ConfigError) as err:
        parse_config("rule: kpz-quadratic\nlaw: rademacher\nN: 64\nepsilon: 0.5\n", "simulate")
    assert err.value.errors == ["epsilon: must lie in (0, 0.3], got 0.5"]


def test_all_errors_reported():
    text = "rule: nonsense\nlaw: cauchy\nN: -3\nepsilon: 0\nfoo: 1\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text, "simulate")
    fields = {e.split(":")[0] for e in err.value.errors}
    assert {"rule", "law", "N", "epsilon", "foo"} <= fields


def test_custom_rule_beta_extracted():
    cfg = parse_config('rule: {name: custom, expr: "(u+v)/2 + 0.5*(u-v)^2"}\nlaw: rademacher\nN: 64\n', "simulate")
    from kpzlattice.cli import build_rule

    assert build_rule(cfg.rule).beta == pytest.approx(1.0, abs=1e-5)


def test_polymer_needs_beta():
    with pytest.raises(ConfigError):
        parse_config("rule: polymer\nlaw: rademacher\nN: 16\n", "simulate")


def test_lists_only_for_sweeps():
    with pytest.raises(ConfigError):
        parse_config("rule: linear\nlaw: rademacher\nN: [16, 64]\n", "simulate")
    parse_config("rule: linear\nlaw: rademacher\nN: [16, 64]\n", "couple")


def test_roundtrip():
    cfg = parse_config("rule: {name: polymer, beta: 1.0}\nlaw: {family: uniform, halfwidth: 1.5}\nN: 16\nseed0: 4\n", "couple")
    again = parse_config(cfg.dump())
    assert again == cfg


@pytest.fixture
def run_cli(tmp_path):
    def go(command, text, *extra):
        path = tmp_path / "cfg.yaml"
        path.write_text(text)
        code = main([command, "--config", str(path), "--out", str(tmp_path), *extra])
        out = tmp_path / f"{command}.json"
        return code, (json.loads(out.read_text()) if out.exists() else None)

    return go


def test_constants_command(run_cli):
    code, doc = run_cli("constants", "rule: kpz-quadratic\nlaw: rademacher\nN: 64\nhorizon: 10000\n")
    assert code == 0 and doc["version"] == __version__
    c = doc["result"]["constants"]
    assert abs(c["C1"] - 2.16) < 0.02
    assert 13.6 < c["C2"] < 13.8


def test_gf_check_command(run_cli):
    code, doc = run_cli("gf-check", "")
    assert code == 0 and doc["result"]["pass"]


def test_simulate_zero_law(run_cli, tmp_path):
    code, doc = run_cli("simulate", "rule: kpz-quadratic\nlaw: zero\nN: 16\nreplicas: 3\ncsv: true\n")
    assert code == 0
    for rep in doc["result"]["replicas"]:
        assert rep["sup_abs_f"] == 0
        assert all(v == 0 for v in rep["ftilde"].values())
    lines = (tmp_path / "simulate_surface.csv").read_text().splitlines()
    assert lines[0] == "x,t,f" and all(line.endswith(",0.0") for line in lines[1:])


def test_invariance_mismatched_beta(run_cli):
    code, doc = run_cli("invariance", "rule: [kpz-quadratic, kpz-sqrt]\nlaw: rademacher\nN: [16]\nreplicas: 60\n")
    assert code == 2 and doc["error"]["type"] == "DesignError"


def test_blowup_exit_code(run_cli):
    code, doc = run_cli("simulate", "rule: kpz-quadratic\nlaw: rademacher\nN: 64\nreplicas: 2\n")
    assert code == 3 and doc["error"]["type"] == "BlowUpError"


def test_invalid_config_exit_code(run_cli):
    code, doc = run_cli("simulate", "rule: kpz-quadratic\nlaw: rademacher\nN: 64\nepsilon: 0.5\n")
    assert code == 2 and doc is None


def test_capacity_exit_code(run_cli):
    code, doc = run_cli("gf-check", "order: 100\n")
    assert code == 4 and doc["error"]["type"] == "CapacityError"


def test_couple_and_renorm_check(run_cli):
    code, doc = run_cli("couple", "rule: {name: polymer, beta: 1.0}\nlaw: rademacher\nN: 16\nreplicas: 4\nconvention: lse\n")
    assert code == 0 and max(r["sup_delta"] for r in doc["result"]["rows"]) < 1e-12
    code, doc = run_cli("renorm-check", "rule: kpz-sqrt\nlaw: rademacher\nN: 16\nreplicas: 50\nepsilon: 0.25\n")
    res = doc["result"]["results"][0]
    assert code == 0 and res["mean_Y"] < 0 and res["exact_E_Y"] < 0


def test_idempotent_and_config_echo(run_cli, tmp_path):
    text = "rule: linear\nlaw: uniform\nN: 16\nreplicas: 5\nseed0: 7\n"
    run_cli("simulate", text)
    first = (tmp_path / "simulate.json").read_bytes()
    run_cli("simulate", text)
    assert (tmp_path / "simulate.json").read_bytes() == first
    doc = json.loads(first)
    echoed = parse_config(yaml.safe_dump(doc["config"]))
    assert echoed == parse_config(text, "simulate")


def test_seed_override(run_cli):
    _, a = run_cli("simulate", "rule: linear\nlaw: rademacher\nN: 16\nreplicas: 2\n", "--seed", "5")
    assert a["config"]["seed0"] == 5


def test_run_api(tmp_path):
    cfg = ExperimentConfig(command="constants", rule="linear", law="rademacher", N=16, horizon=100)
    assert run(cfg, tmp_path) == 0
