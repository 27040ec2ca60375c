import hashlib
import json
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest
import yaml

from conftest import MNIST_DIR, needs_mnist
from ternary_rram import memory_array
from ternary_rram.cli import COMMANDS, main


def _tree_digest(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in files:
            p = os.path.join(dirpath, f)
            out[os.path.relpath(p, root)] = hashlib.sha256(open(p, "rb").read()).hexdigest()
    return out


def _cfg(tmp_path, **tree):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(tree))
    return str(p)


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().err


def test_every_subcommand_is_registered():
    assert set(COMMANDS) == {"calibrate", "sense-map", "ber", "pvt", "train", "inject", "round-trip"}


def test_console_entry_point():
    exe = shutil.which("ternary-rram")
    cmd = [exe] if exe else [sys.executable, "-m", "ternary_rram.cli"]
    r = subprocess.run(cmd + ["--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for name in COMMANDS:
        assert name in r.stdout


def test_ber_sense_map_pvt_outputs(tmp_path, capsys):
    cfg = _cfg(tmp_path, ber={"trials_per_weight": 20000}, sense_map={"points": 7, "reads": 20},
               pvt={"points": 31, "reads": 50})
    for cmd in ("ber", "sense-map", "pvt"):
        code, err = _run(capsys, cmd, "--config", cfg, "--out", tmp_path / cmd, "--seed", 1)
        assert code == 0, err
        assert (tmp_path / cmd / "config.resolved.yaml").exists()
    s = json.loads((tmp_path / "ber" / "ber_summary.json").read_text())
    assert set(s) >= {"type1", "type2", "type3"}
    rows = (tmp_path / "sense-map" / "sense_map.csv").read_text().splitlines()
    assert rows[0] == "r_bl,r_blb,n_plus,n_minus,n_zero,region" and len(rows) == 50
    pvt = np.loadtxt(tmp_path / "pvt" / "pvt.csv", delimiter=",", skiprows=1)
    assert pvt.shape == (3, 4)
    assert pvt[0, 2] < pvt[1, 2] < pvt[2, 2]


def test_seed_changes_monte_carlo_output(tmp_path, capsys):
    cfg = _cfg(tmp_path, ber={"trials_per_weight": 20000})
    for s in (1, 2):
        assert _run(capsys, "ber", "--config", cfg, "--out", tmp_path / str(s), "--seed", s)[0] == 0
    assert (tmp_path / "1" / "ber.csv").read_bytes() != (tmp_path / "2" / "ber.csv").read_bytes()


def test_calibrate_rerun_with_produced_params_is_a_no_op(tmp_path, capsys):
    cfg = _cfg(tmp_path, pcsa={"node_capacitance": 8e-12})
    assert _run(capsys, "calibrate", "--config", cfg, "--out", tmp_path / "a")[0] == 0
    first = json.loads((tmp_path / "a" / "calibration.json").read_text())
    assert first["changed"]
    for b in first["boundaries"]:
        assert 10e3 < b["boundary"] < 100e3
    params = json.loads((tmp_path / "a" / "params.json").read_text())
    cfg2 = _cfg(tmp_path, pcsa=params)
    assert _run(capsys, "calibrate", "--config", cfg2, "--out", tmp_path / "b")[0] == 0
    second = json.loads((tmp_path / "b" / "calibration.json").read_text())
    assert not second["changed"]
    assert (tmp_path / "b" / "params.json").read_bytes() == (tmp_path / "a" / "params.json").read_bytes()


def test_contradictory_anchors_exit_nonzero_with_listing(tmp_path, capsys):
    anchors = [
        {"r_bl": 5e3, "r_blb": 350e3, "window": 50e-9, "jitter": False, "label": "fast"},
        {"r_bl": 5e3, "r_blb": 350e3, "window": 200e-9, "converge": False, "jitter": False, "label": "slow"},
    ]
    code, err = _run(capsys, "calibrate", "--config", _cfg(tmp_path, calibration={"anchors": anchors}),
                     "--out", tmp_path / "o")
    assert code == 3
    assert "violated anchors" in err and ("fast" in err or "slow" in err)
    assert not (tmp_path / "o" / "params.json").exists()


@pytest.mark.parametrize("tree,match", [
    ({"unknown": 1}, "unknown top-level keys"),
    ({"sense_map": {"points": 1}}, "points"),
])
def test_bad_config_exits_nonzero(tmp_path, capsys, tree, match):
    code, err = _run(capsys, "ber", "--config", _cfg(tmp_path, **tree), "--out", tmp_path / "o")
    assert code == 2 and err.startswith("error:") and match in err


def test_missing_config_file_and_bad_threads(tmp_path, capsys):
    code, err = _run(capsys, "ber", "--config", tmp_path / "nope.yaml")
    assert code == 2 and "nope.yaml" in err
    code, err = _run(capsys, "ber", "--threads", 0, "--out", tmp_path / "o")
    assert code == 2 and "--threads" in err


def test_missing_dataset_names_the_path(tmp_path, capsys):
    missing = tmp_path / "no-mnist-here"
    cfg = _cfg(tmp_path, dataset={"dir": str(missing)})
    code, err = _run(capsys, "train", "--config", cfg, "--out", tmp_path / "o")
    assert code == 2 and str(missing) in err


def test_inject_without_checkpoint(tmp_path, capsys):
    code, err = _run(capsys, "inject", "--out", tmp_path / "o")
    assert code == 2 and "checkpoint" in err


def test_round_trip_without_noise_is_exact(tmp_path, capsys):
    w = np.random.default_rng(0).integers(-1, 2, (6, 9)).astype(np.int8)
    memory_array.write_ternary_csv(tmp_path / "w.csv", w)
    before = (tmp_path / "w.csv").read_bytes()
    cfg = _cfg(tmp_path, device={"condition": {"lrs_log_sigma": 0, "hrs_log_sigma": 0}},
               pcsa={"jitter_log_sigma": 0}, array={"weights": str(tmp_path / "w.csv"), "reads": 2})
    code, err = _run(capsys, "round-trip", "--config", cfg, "--out", tmp_path / "o")
    assert code == 0, err
    assert np.array_equal(memory_array.read_ternary_csv(tmp_path / "o" / "read.csv"), w)
    rep = json.loads((tmp_path / "o" / "round_trip.json").read_text())
    assert rep["mismatches_first_read"] == 0 and rep["reads"] == 2
    assert (tmp_path / "w.csv").read_bytes() == before
    snap = memory_array.load_snapshot(tmp_path / "o" / "array")
    assert snap.r_bl.shape == w.shape


def test_round_trip_needs_weights(tmp_path, capsys):
    code, err = _run(capsys, "round-trip", "--out", tmp_path / "o")
    assert code == 2 and "array.weights" in err


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    if not os.path.exists(os.path.join(MNIST_DIR, "train-images-idx3-ubyte")):
        pytest.skip("MNIST not available")
    d = tmp_path_factory.mktemp("pipe")
    base = {"dataset": {"dir": MNIST_DIR, "train_limit": 3000, "test_limit": 1000}, "train": {"epochs": 2},
            "network": {"sizes": [784, 64, 10]}}
    (d / "cfg.yaml").write_text(yaml.safe_dump(base))
    assert main(["train", "--config", str(d / "cfg.yaml"), "--out", str(d / "train")]) == 0
    return d, base


@needs_mnist
def test_train_then_inject_pipeline(pipeline, capsys):
    d, base = pipeline
    ck = d / "train" / "checkpoint"
    before = _tree_digest(ck)
    hist = (d / "train" / "history.csv").read_text().splitlines()
    assert hist[0] == "epoch,train_loss,train_acc,test_acc" and len(hist) == 3
    tree = {**base, "inject": {"rates": [0.0, 0.2], "n_passes": 2, "types": [1, 3],
                               "combined": {"p1": 1e-6, "p2": 0.01, "p3": 0.065}}}
    (d / "inj.yaml").write_text(yaml.safe_dump(tree))
    code, err = _run(capsys, "inject", "--config", d / "inj.yaml", "--checkpoint", ck, "--out", d / "inj")
    assert code == 0, err
    rows = (d / "inj" / "fault_curves.csv").read_text().splitlines()
    assert rows[0] == "error_type,rate,mean_acc,std_acc,n_passes" and len(rows) == 6
    assert rows[-1].startswith("combined,1e-06/0.01/0.065,")
    summary = json.loads((d / "inj" / "inject_summary.json").read_text())
    assert summary["clean_accuracy"] > 0.8
    assert _tree_digest(ck) == before


@needs_mnist
def test_resume_continues_step_count(pipeline, capsys):
    d, base = pipeline
    tree = {**base, "train": {"epochs": 3}}
    (d / "more.yaml").write_text(yaml.safe_dump(tree))
    code, err = _run(capsys, "train", "--config", d / "more.yaml", "--resume", d / "train" / "checkpoint",
                     "--out", d / "resumed")
    assert code == 0, err
    old = json.loads((d / "train" / "checkpoint" / "manifest.json").read_text())
    new = json.loads((d / "resumed" / "checkpoint" / "manifest.json").read_text())
    assert new["step"] > old["step"] and new["epoch"] == 3
    assert (d / "resumed" / "history.csv").read_text().splitlines()[1].startswith("3,")
    tree["network"] = {"sizes": [784, 32, 10]}
    (d / "other.yaml").write_text(yaml.safe_dump(tree))
    code, err = _run(capsys, "train", "--config", d / "other.yaml", "--resume", d / "train" / "checkpoint",
                     "--out", d / "bad")
    assert code == 2 and "different network" in err


@needs_mnist
def test_binary_checkpoint_with_type3_errors_fails(pipeline, capsys):
    d, base = pipeline
    tree = {**base, "network": {"sizes": [784, 32, 10], "weight_mode": "binary"}, "train": {"epochs": 1}}
    (d / "bnn.yaml").write_text(yaml.safe_dump(tree))
    assert _run(capsys, "train", "--config", d / "bnn.yaml", "--out", d / "bnn")[0] == 0
    tree["inject"] = {"types": [3], "rates": [0.1], "n_passes": 1}
    (d / "bnn_inj.yaml").write_text(yaml.safe_dump(tree))
    code, err = _run(capsys, "inject", "--config", d / "bnn_inj.yaml", "--checkpoint", d / "bnn" / "checkpoint",
                     "--out", d / "bnn_inj")
    assert code == 2 and "Type 1" in err


def test_writes_stay_inside_output_directory(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = _cfg(tmp_path, ber={"trials_per_weight": 1000})
    before = set(os.listdir(tmp_path))
    assert _run(capsys, "ber", "--config", cfg, "--out", "o")[0] == 0
    assert set(os.listdir(tmp_path)) - before == {"o"}
