"""End-to-end checks of the command-line tool on a small synthetic corpus."""

import csv
import json
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

CLI = os.environ.get("PROGNOSIS_CLI", "prognosis")


def run(*args, check=True):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}\n{proc.stderr}")
    return proc


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    run("synthesize", "--good", 4, "--poor", 4, "--hours", 1, "--duration", 620, "--seed", 5, "--out", data)
    run_dir = root / "run"
    run("train", "--data", data, "--preset", "desk", "--iters", 20, "--eval-every", 10, "--seed", 2,
        "--quiet", "--run", run_dir)
    return root, data, run_dir


def tree_bytes(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_synthesize_is_deterministic(tmp_path):
    run("synthesize", "--good", 1, "--poor", 1, "--hours", 1, "--duration", 60, "--seed", 9, "--out", tmp_path / "a")
    run("synthesize", "--good", 1, "--poor", 1, "--hours", 1, "--duration", 60, "--seed", 9, "--out", tmp_path / "b")
    a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
    assert len(a) == 6
    assert a == b


def test_usage_errors_exit_2(tmp_path):
    proc = run("synthesize", "--good", 0, "--poor", 0, "--out", tmp_path, check=False)
    assert proc.returncode == 2
    assert "at least one patient" in proc.stderr
    assert run("train", "--preset", "huge", "--dry-run", check=False).returncode == 2
    assert run(check=False).returncode == 2


def test_missing_data_dir_names_the_path(tmp_path):
    missing = tmp_path / "nowhere"
    proc = run("preprocess", "--data", missing, check=False)
    assert proc.returncode == 1
    assert str(missing) in proc.stderr


def test_montage_list():
    lines = run("montage", "list").stdout.strip().splitlines()
    assert lines[0] == "index,anode,cathode"
    assert len(lines) == 19
    assert lines[1] == "0,Fp1,F7"


def test_run_directory_contents(corpus):
    _, _, run_dir = corpus
    for name in ("best.ckpt", "last.ckpt", "metrics.csv", "split.json", "manifest.json"):
        assert (run_dir / name).is_file(), name
    with open(run_dir / "metrics.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 20
    assert [r["iteration"] for r in rows if r["val_accuracy"]] == ["10", "20"]


def test_evaluate_reproduces_logged_accuracy(corpus):
    root, data, run_dir = corpus
    manifest = json.loads((run_dir / "manifest.json").read_text())
    out = run("evaluate", "--data", data, "--checkpoint", run_dir / "best.ckpt", "--out", root / "eval",
              "--split", run_dir / "split.json", "--quiet").stdout
    fields = dict(line.split("=", 1) for line in out.strip().splitlines())
    assert float(fields["val_accuracy"]) == pytest.approx(manifest["best_val_accuracy"], abs=1e-6)
    report = json.loads((root / "eval" / "report.json").read_text())
    assert 0.0 <= report["challenge_metric"] <= 1.0


def test_truncated_checkpoint(corpus, tmp_path):
    _, data, run_dir = corpus
    blob = (run_dir / "best.ckpt").read_bytes()
    cut = tmp_path / "cut.ckpt"
    cut.write_bytes(blob[: len(blob) // 2])
    proc = run("predict", data / "syn0001", "--checkpoint", cut, check=False)
    assert proc.returncode == 1
    assert "checkpoint truncated" in proc.stderr


def test_predict_threshold(corpus):
    _, data, run_dir = corpus
    ckpt = run_dir / "best.ckpt"

    def predict(threshold):
        out = run("predict", data / "syn0001", data / "syn0005", "--checkpoint", ckpt, "--threshold", threshold).stdout
        return [json.loads(line) for line in out.strip().splitlines()]

    assert [p["outcome_pred"] for p in predict(0.0)] == ["Poor", "Poor"]
    assert [p["outcome_pred"] for p in predict(1.0)] == [
        "Poor" if p["poor_prob"] >= 1.0 else "Good" for p in predict(0.5)
    ]
    middle = predict(0.5)
    assert [p["patient_id"] for p in middle] == ["syn0001", "syn0005"]
    for p in middle:
        assert p["outcome_pred"] == ("Poor" if p["poor_prob"] >= 0.5 else "Good")
        assert 1 <= p["cpc_pred"] <= 5
    assert run("predict", data / "syn0001", "--checkpoint", ckpt, "--threshold", 1.5, check=False).returncode == 2


def drop_electrode(header_path, electrode, out_dir):
    header = json.loads(header_path.read_text())
    n = header["n_samples"]
    samples = np.fromfile(header_path.parent / header["signal_file"], dtype="<f4").reshape(-1, n)
    keep = [i for i, e in enumerate(header["electrodes"]) if e != electrode]
    out_dir.mkdir(parents=True)
    header["electrodes"] = [header["electrodes"][i] for i in keep]
    samples[keep].tofile(out_dir / header["signal_file"])
    out = out_dir / header_path.name
    out.write_text(json.dumps(header))
    return out


def test_predict_without_required_electrode(corpus, tmp_path):
    _, data, run_dir = corpus
    header = next((data / "syn0001").glob("*.hdr.json"))
    broken = drop_electrode(header, "Cz", tmp_path / "syn0001")
    proc = run("predict", broken, "--checkpoint", run_dir / "best.ckpt", check=False)
    assert proc.returncode == 1
    assert "syn0001" in proc.stderr
