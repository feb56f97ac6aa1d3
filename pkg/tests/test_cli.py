import json
import subprocess
import sys
from pathlib import Path

import pytest

from semcomm.cli import main
from semcomm.harness.manifest import MANIFEST_NAME, load_manifest

from conftest import FIXTURES

TOY = str(FIXTURES / "toy.cfg")
FAST = [
    "--set", "training.channel_steps=5",
    "--set", "training.semantic_steps=10",
    "--set", "training.rounds=1",
]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def error_line(err):
    lines = [ln for ln in err.splitlines() if ln.startswith("{")]
    assert len(lines) == 1
    return json.loads(lines[0])


def files_under(root: Path) -> list[str]:
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file())


def test_missing_config_exits_2_naming_path(capsys, tmp_path):
    missing = tmp_path / "nope.cfg"
    code, _, err = run(capsys, "train", "--config", str(missing))
    assert code == 2
    e = error_line(err)
    assert e["error"] == "config" and str(missing) in e["message"]


def test_unknown_flag_exits_2_with_json(capsys):
    code, _, err = run(capsys, "train", "--config", TOY, "--bogus")
    assert code == 2 and error_line(err)["error"] == "usage"
    code, _, err = run(capsys, "train", "--config", TOY, "--set", "nodot=1")
    assert code == 2 and "section.key=value" in error_line(err)["message"]


def test_unknown_config_key_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--config", TOY, "--set", "training.depth=3", "--out", str(tmp_path))
    assert code == 2 and "depth" in error_line(err)["message"]


def test_entry_point_runs_as_module(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "semcomm.cli", "sweep-snr", "--frobnicate"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 2
    assert json.loads(proc.stderr.strip().splitlines()[-1])["error"] == "usage"


def test_train_is_byte_reproducible(capsys, tmp_path):
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code, stdout, _ = run(capsys, "train", "--config", TOY, "--seed", "3", "--out", str(out), *FAST)
        assert code == 0
        assert json.loads(stdout)["checkpoint"].endswith("model.ckpt")
        blobs.append((out / "model.ckpt").read_bytes())
        m = load_manifest(out)
        assert m["config"]["seed"] == 3
        assert files_under(out) == sorted(m["files"]["checkpoints"] + m["files"]["model"] + m["files"]["curves"]
                                          + m["files"]["metrics"] + [MANIFEST_NAME])
    assert blobs[0] == blobs[1]
    assert load_manifest(tmp_path / "a")["config_hash"] == load_manifest(tmp_path / "b")["config_hash"]


def test_pipeline_with_saved_model(capsys, tmp_path):
    model = tmp_path / "model"
    assert run(capsys, "train", "--config", TOY, "--out", str(model), *FAST)[0] == 0
    out = tmp_path / "pipe"
    code, stdout, _ = run(capsys, "pipeline", "--config", TOY, "--model", str(model), "--out", str(out),
                          "--snr", "60", "--limit", "12", "--channel", "rayleigh")
    assert code == 0
    summary = json.loads(stdout)
    assert summary["n"] == 12 and 0 <= summary["ssq"] <= 1
    rows = (out / "pipeline.csv").read_text().splitlines()
    assert rows[0].startswith("id,label,snr_db") and len(rows) == 13
    m = load_manifest(out)
    assert "perfect-csi" in m["deviations"] and files_under(out) == sorted(m["files"]["metrics"] + [MANIFEST_NAME])


def test_pipeline_rejects_incomplete_model_dir(capsys, tmp_path):
    code, _, err = run(capsys, "pipeline", "--config", TOY, "--model", str(tmp_path), "--out", str(tmp_path / "o"))
    assert code == 2 and "model.ckpt" in error_line(err)["message"]


@pytest.fixture(scope="module")
def sweep_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "sweep"
    argv = ["sweep-snr", "--config", TOY, "--seed", "7", "--out", str(out), *FAST,
            "--set", "sweep.variants=nam-uniform fixed-10", "--set", "sweep.seeds=2",
            "--set", "channel.snr_test=0 5 10"]
    assert main(argv) == 0
    return out


def test_sweep_writes_manifest_and_csv(sweep_run):
    m = load_manifest(sweep_run)
    assert m["command"] == "sweep-snr" and m["config"]["seed"] == 7
    lines = (sweep_run / "bleu_vs_snr.csv").read_text().splitlines()
    assert lines[0] == "snr_db,variant,mean,stddev,n" and len(lines) == 1 + 2 * 3
    assert {ln.split(",")[1] for ln in lines[1:]} == {"nam-uniform", "fixed-10"}
    assert m["notes"]["missing_checkpoints"] == []
    # no orphans: everything on disk is listed, and everything listed exists
    listed = sorted({f for fs in m["files"].values() for f in fs} | {MANIFEST_NAME})
    assert files_under(sweep_run) == listed
    assert any(f.startswith("checkpoints/nam-uniform-seed7") for f in listed)


def test_sweep_reuses_checkpoints(capsys, sweep_run, tmp_path):
    out = tmp_path / "again"
    code, stdout, _ = run(capsys, "sweep-snr", "--config", TOY, "--seed", "7", "--out", str(out), *FAST,
                          "--set", "sweep.variants=nam-uniform fixed-10", "--set", "sweep.seeds=2",
                          "--set", "channel.snr_test=0 5 10", "--checkpoints", str(sweep_run / "checkpoints"))
    assert code == 0 and json.loads(stdout)["missing"] == []
    assert (out / "bleu_vs_snr.csv").read_bytes() == (sweep_run / "bleu_vs_snr.csv").read_bytes()
    assert not (out / "checkpoints").exists()


def test_continual_and_inspect_memory(capsys, tmp_path):
    out = tmp_path / "cont"
    code, stdout, _ = run(capsys, "continual-map", "--config", TOY, "--out", str(out),
                          "--set", "training.channel_steps=3", "--set", "training.semantic_steps=6",
                          "--set", "training.rounds=1", "--set", "med.n_stm_max=20", "--set", "med.seeds=1",
                          "--set", "datasets.sequence=toy-cifar toy-birds")
    assert code == 0
    assert set(json.loads(stdout)["forgetting_bleu1"]) == {"med", "no-med"}
    m = load_manifest(out)
    assert files_under(out) == sorted({f for fs in m["files"].values() for f in fs} | {MANIFEST_NAME})
    code, stdout, _ = run(capsys, "inspect-memory", str(out / "memory_med_seed0.json"))
    assert code == 0
    summary = json.loads(stdout)
    assert summary["ltm"] > 0 and set(summary["by_source"]) <= {"toy-cifar", "toy-birds"}


def test_inspect_missing_snapshot(capsys, tmp_path):
    code, _, err = run(capsys, "inspect-memory", str(tmp_path / "none.json"))
    assert code == 2 and "none.json" in error_line(err)["message"]
