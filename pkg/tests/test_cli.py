import json
import subprocess
import sys

import numpy as np
import pytest

from engine_testbench.cli import main, config_hash
from engine_testbench.sim import read_trajectory

TINY_RL = {"total_steps": 120, "warmup_steps": 60, "batch_size": 16, "eval_every": 0, "hidden": [8, 8]}


def run(*argv):
    return main([str(a) for a in argv])


def manifest(path):
    return json.loads(open(str(path) + ".manifest.json").read())


def test_sim_writes_trajectory_and_manifest(tmp_path):
    out = tmp_path / "traj.csv"
    assert run("sim", "--scenario", "startup", "--out", out) == 0
    rows = read_trajectory(out)
    t = np.array([r["t"] for r in rows])
    assert t[0] == 0.0 and np.allclose(np.diff(t), 0.05)
    m = manifest(out)
    assert m["command"] == "sim" and m["seed"] == 0 and m["outputs"] == [str(out)]
    assert m["config_hash"] == config_hash(m["config"])
    assert m["started"] <= m["finished"]


def test_sim_crash_exit_code(tmp_path, capsys):
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps({"knots": [0.0], "values": [[1.0, 1.0, 1.0]]}))
    assert run("sim", "--scenario", "startup", "--schedule", sched, "--out", tmp_path / "t.csv") == 3
    assert "crash: p_cc" in capsys.readouterr().err


def test_config_errors(tmp_path, capsys):
    assert run("sim", "--config", tmp_path / "missing.json", "--out", tmp_path / "t.csv") == 2
    assert run("sim", "--scenario", "nope", "--out", tmp_path / "t.csv") == 2
    assert run("sim", "--controller", "policy", "--out", tmp_path / "t.csv") == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("train-rl", "--config", bad, "--out", tmp_path / "p.json") == 2
    (tmp_path / "unk.json").write_text(json.dumps({"bogus": 1}))
    assert run("train-rl", "--config", tmp_path / "unk.json", "--out", tmp_path / "p.json") == 2
    with pytest.raises(SystemExit) as exc:
        run("sim")  # --out missing
    assert exc.value.code == 2


def test_log_level_validation(tmp_path, monkeypatch):
    monkeypatch.setenv("ENGINE_TESTBENCH_LOG", "loud")
    assert run("steady-state", "--valves", "0.6,0.6,0.6", "--out", tmp_path / "s.json") == 2


def test_steady_state(tmp_path, capsys):
    out = tmp_path / "ss.json"
    assert run("steady-state", "--valves", "0.6276808811080385,0.6276808811080385,0.6", "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["state"]["p_cc"] == pytest.approx(100e5, rel=1e-6)
    assert max(abs(v) for v in doc["residuals"].values()) < 1e-6
    assert run("steady-state", "--valves", "0,0,0", "--out", tmp_path / "z.json") == 3
    assert "rest" in capsys.readouterr().err


def test_training_failure_exit_code(tmp_path):
    # a critic learning rate this large blows the loss past the divergence guard
    cfg = tmp_path / "h.json"
    cfg.write_text(json.dumps({**TINY_RL, "critic_lr": 1e3, "reward_scale": 1e4}))
    assert run("train-rl", "--scenario", "startup", "--config", cfg, "--out", tmp_path / "p.json") == 4


def test_train_rl_and_eval_policy(tmp_path):
    cfg = tmp_path / "h.json"
    cfg.write_text(json.dumps(TINY_RL))
    pol = tmp_path / "p.json"
    assert run("train-rl", "--scenario", "setpoint", "--config", cfg, "--out", pol) == 0
    out = tmp_path / "m.json"
    assert run("eval", "--scenario", "setpoint", "--controller", "policy", "--policy", pol, "--out", out) == 0
    doc = json.loads(out.read_text())
    events = doc["runs"][0]["events"]
    assert [(e["from_p_cc"], e["to_p_cc"]) for e in events] == [(60e5, 80e5), (80e5, 40e5)]
    assert all("settling_time" in e for e in events)
    assert "mean_inference_s" not in doc["runs"][0]
    assert "mean_inference_s" in manifest(out)["timing"]


def test_surrogate_predict_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"epochs": 3, "hidden": [8]}))
    model = tmp_path / "s.json"
    assert run("train-surrogate", "--oracle", "fatigue_life", "--n", 200, "--config", cfg, "--out", model) == 0
    pred = tmp_path / "p.csv"
    inp = tmp_path / "x.csv"
    inp.write_text("T_h,T_o\n750,400\n1100,400\n800,250\n")
    assert run("predict", "--model", model, "--input", inp, "--out", pred) == 0
    lines = pred.read_text().splitlines()
    assert lines[0].endswith("extrapolating")
    assert [l.rsplit(",", 1)[1] for l in lines[1:]] == ["0", "1", "1"]
    assert run("predict", "--model", model, "--x", "1,2,3", "--out", pred) == 2


def test_monitor_pipeline_cli(tmp_path):
    data = tmp_path / "w.csv"
    assert run("monitor-gen", "--runs", 6, "--seed", 1, "--out", data) == 0
    svm = tmp_path / "svm.json"
    assert run("monitor-train", "--data", data, "--out", svm) == 0
    sig = tmp_path / "sig.csv"
    assert run("monitor-gen", "--kind", "signal", "--no-onset", "--seed", 3, "--out", sig) == 0
    det = tmp_path / "d.json"
    assert run("detect", "--model", svm, "--signal", sig, "--out", det) == 0
    doc = json.loads(det.read_text())
    assert doc["windows"] > 0 and doc["n_alarms"] == 0
    assert run("detect", "--model", svm, "--data", data, "--out", det) == 0


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "engine_testbench.cli", "steady-state", "--valves", "0,0,0",
                        "--out", str(tmp_path / "z.json")], capture_output=True, text=True)
    assert r.returncode == 3 and r.stderr.count("\n") == 1
