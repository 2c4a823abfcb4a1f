from __future__ import annotations

import json
import subprocess
import sys

import pytest

from freessep.cli import main


def run(argv, tmp_path):
    return main([*argv, "--out", str(tmp_path)])


def test_particle(tmp_path, capsys):
    assert run(["simulate-particle", "--j", "1", "--t", "5", "--seed", "2"], tmp_path) == 0
    out = json.loads((tmp_path / "particle.json").read_text())
    assert out["median_violations"] == 0
    assert (tmp_path / "particle.csv").exists()
    assert json.loads(capsys.readouterr().out)["seed"] == 2


def test_particle_bad_init(tmp_path):
    assert run(["simulate-particle", "--init", "zz"], tmp_path) == 2


@pytest.mark.parametrize("mode", ["uncentered", "centered", "sandwich"])
def test_interface_modes(tmp_path, mode):
    assert run(["simulate-interface", "--mode", mode, "--t", "5"], tmp_path) == 0
    assert json.loads((tmp_path / "interface.json").read_text())["mode"] == mode


def test_injected_fault_exit_1(tmp_path):
    code = 0
    for seed in range(10):
        code = run(["simulate-interface", "--mode", "sandwich", "--inject-fault", "--seed", str(seed)], tmp_path)
        if code:
            break
    assert code == 1


def test_macro(tmp_path):
    assert run(["macro-evolve", "--delta", "0.01", "--t", "0.02", "--h", "0.005"], tmp_path) == 0
    assert (tmp_path / "interface.csv").exists()


def test_harness(tmp_path):
    assert run(["harness", "--steps", "20"], tmp_path) == 0
    assert json.loads((tmp_path / "harness.json").read_text())["K0"] == pytest.approx(2.5 + 2 * 0.05 * 20)
    assert run(["harness", "--steps", "20", "--delta-steps", "4"], tmp_path) == 0


def test_missing_config(tmp_path):
    assert run(["experiment", "hydro", "--config", str(tmp_path / "none.json")], tmp_path) == 2


def test_bad_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"bogus": 1}')
    assert run(["experiment", "hydro", "--config", str(p)], tmp_path) == 2


def test_usage_errors(tmp_path):
    assert main(["no-such-command"]) == 2
    assert main(["harness", "--steps", "x"]) == 2


def test_experiment_invariant(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"name": "invariant", "T_burn": 50, "T_avg": 500, "n_batches": 5}))
    assert run(["experiment", "invariant", "--config", str(p), "--j", "0.25", "--seed", "1"], tmp_path) == 0
    out = json.loads((tmp_path / "invariant.json").read_text())
    assert out["rows"][0]["J"] == 0.25 and out["rows"][0]["target"] == 2.0
    assert out["config"]["T_burn"] == 50


def test_experiment_stationary(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"T": 0.02, "h": 0.005}))
    assert run(["experiment", "stationary", "--config", str(p)], tmp_path) == 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "freessep", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
