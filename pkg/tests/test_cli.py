import json

import pytest

from shocklab import ConfigError
from shocklab.cli import main, parse_sweep
from shocklab.config import load_config, manifest_hash

SYM2 = {"name": "SYM2"}


def write_cfg(path, cfg):
    p = path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def run(tmp_path, command, cfg, *extra):
    out = tmp_path / "out"
    code = main([command, "--config", write_cfg(tmp_path, cfg), "--out", str(out), *extra])
    return code, out


def test_manifest_hash_ignores_key_order():
    assert manifest_hash({"a": 1, "b": [1, 2]}) == manifest_hash({"b": [1, 2], "a": 1})
    assert manifest_hash({"a": 1}) != manifest_hash({"a": 2})


def test_schema_rejects_unknown_keys(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"model": SYM2, "grid": {"MM": 3}}))
    with pytest.raises(ConfigError, match="grid"):
        load_config(p)
    for shock in ({"p": 2, "s": 0.95, "epsilon": 0.1}, {"p": 2, "U_plus": [0.0, 0.0]}):
        p.write_text(json.dumps({"model": SYM2, "shock": shock}))
        with pytest.raises(ConfigError):
            load_config(p)


def test_parse_sweep_aliases():
    assert parse_sweep("epsilon=0.05,0.1") == ("shock.epsilon", [0.05, 0.1])
    assert parse_sweep("grid.M=801")[1] == [801]
    with pytest.raises(ConfigError):
        parse_sweep("epsilon")


def test_check_pass(tmp_path):
    code, out = run(tmp_path, "check", {"model": SYM2, "shock": {"p": 2}})
    rep = json.loads((out / "hypotheses.json").read_text())
    assert code == 0 and rep["theta_symbol"] > 0 and len(rep["config_sha256"]) == 64


def test_check_without_viscosity(tmp_path):
    code, out = run(tmp_path, "check", {"model": {"name": "SYM2", "params": {"b": 0.0}}, "shock": {"p": 2}})
    assert code == 2
    assert json.loads((out / "hypotheses.json").read_text())["a2_ok"] is False


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"model": ')
    assert main(["check", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "malformed" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["check", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 1


def test_profile_outputs(tmp_path):
    cfg = {"model": SYM2, "shock": {"p": 2, "s": 0.95}, "grid": {"M": 1201}}
    code, out = run(tmp_path, "profile", cfg)
    meta = json.loads((out / "profile.json").read_text())
    assert code == 0 and meta["residuals"]["ode_residual"] <= 1e-8
    assert meta["config_sha256"] == manifest_hash(cfg)
    assert (out / "profile.csv").read_text().startswith(f"# manifest={manifest_hash(cfg)}")


def test_profile_degenerate(tmp_path):
    code, _ = run(tmp_path, "profile", {"model": SYM2, "shock": {"p": 2, "epsilon": 0}})
    assert code == 2


def test_profile_sweep(tmp_path):
    cfg = {"model": SYM2, "shock": {"p": 2, "epsilon": 0.1}, "grid": {"M": 1201}}
    code, out = run(tmp_path, "profile", cfg, "--sweep", "epsilon=0.05,0.1,0.2")
    assert code == 0
    assert sorted(p.name for p in out.glob("profile_*.csv")) == [
        "profile_epsilon_0p05.csv", "profile_epsilon_0p1.csv", "profile_epsilon_0p2.csv"]
    assert json.loads((out / "profile_decay_fit.json").read_text())["rates_ok"] is True


def test_kernel_report_and_dump(tmp_path):
    cfg = {"model": SYM2, "shock": {"p": 2, "epsilon": 0.1}, "grid": {"M": 801},
           "kernel": {"dump_y": [-10, 10, 5], "dump_t": [1, 2, 2]}}
    code, out = run(tmp_path, "kernel", cfg, "--dump-e")
    rep = json.loads((out / "kernel_report.json").read_text())
    assert code == 0 and rep["checks"]["pi_mismatch"] <= 1e-8
    assert len((out / "e_kernel.csv").read_text().splitlines()) == 2 + 10


def test_kernel_non_lax(tmp_path, capsys):
    s = 0.95
    v = 2 * (s - 1 / s)
    cfg = {"model": SYM2, "shock": {"p": 2, "U_minus": [v / s, v], "U_plus": [0.0, 0.0], "s": s}}
    code, _ = run(tmp_path, "kernel", cfg)
    assert code == 2
    assert "Lax" in capsys.readouterr().err


def test_simulate_short_horizon(tmp_path, capsys):
    cfg = {"model": SYM2, "shock": {"p": 2, "epsilon": 0.1}, "grid": {"M": 801}, "simulation": {"T": 10}}
    code, _ = run(tmp_path, "simulate", cfg)
    assert code == 2
    assert "insufficient horizon" in capsys.readouterr().err


def test_simulate_outputs_are_deterministic(tmp_path):
    cfg = {"model": SYM2, "shock": {"p": 2, "epsilon": 0.1}, "grid": {"M": 801},
           "simulation": {"T": 100, "dt_out": 1.0, "snapshot_stride": 50}}
    code, out = run(tmp_path, "simulate", cfg)
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert set(man["summary"]["fitted_exponents"]) >= {"Linf", "L2", "vx_Linf", "delta_dot"}
    assert man["config_sha256"] == manifest_hash(cfg)
    assert man["snapshots"] == ["snapshot_00000.csv", "snapshot_00050.csv", "snapshot_00100.csv"]
    first = (out / "timeseries.csv").read_bytes()
    code, _ = run(tmp_path, "simulate", cfg)
    assert code == 0 and (out / "timeseries.csv").read_bytes() == first


def test_simulate_linear_mode(tmp_path):
    cfg = {"model": SYM2, "shock": {"p": 2, "epsilon": 0.1}, "grid": {"M": 801},
           "simulation": {"mode": "linear", "T": 100, "dt_out": 1.0}}
    code, out = run(tmp_path, "simulate", cfg)
    man = json.loads((out / "manifest.json").read_text())
    assert code == 0 and man["mode"] == "linear"


def test_verify_subset(tmp_path):
    cfg = {"model": SYM2, "shock": {"p": 2, "epsilon": 0.1}, "grid": {"M": 801}, "verify": {"criteria": [1, 3]}}
    code, out = run(tmp_path, "verify", cfg)
    res = json.loads((out / "acceptance.json").read_text())
    assert code == 0 and [c["id"] for c in res["criteria"]] == [1, 3]
    assert all(c["passed"] for c in res["criteria"])


def test_seed_override_changes_manifest(tmp_path):
    cfg = {"model": SYM2, "shock": {"p": 2}}
    run(tmp_path, "check", cfg, "--seed", "3")
    rep = json.loads((tmp_path / "out" / "hypotheses.json").read_text())
    assert rep["config_sha256"] == manifest_hash({**cfg, "seed": 3})
