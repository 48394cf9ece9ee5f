import json
import subprocess
import sys

import pytest

from bocs_hedge.cli import build_parser, main


def test_run_requires_seed(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "--d", "5"])


def test_generate_and_reference(tmp_path):
    suite = tmp_path / "suite.json"
    assert main(["generate", "--d", "6", "--n-instances", "3", "--n-initial", "4", "--seed", "1",
                 "--out", str(suite)]) == 0
    data = json.loads(suite.read_text())
    assert len(data["instances"]) == 3 and len(data["initial_points"]) == 4
    refs = tmp_path / "refs.json"
    assert main(["reference", "--suite", str(suite), "--out", str(refs),
                 "--cache-dir", str(tmp_path / "cache")]) == 0
    out = json.loads(refs.read_text())
    assert [r["method"] for r in out] == ["exhaustive"] * 3
    assert len(list((tmp_path / "cache").glob("*.json"))) == 3


def test_run_with_config_and_overrides(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("d: 6\nn_instances: 1\nn_iterations: 3\nn_initial: 3\n"
                   "strategies: [bocs-spinflip]\nsa_sweeps: 30\nsa_runs: 2\ngibbs_sweeps: 10\n")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--seed", "4", "--n-iterations", "4",
                 "--output-dir", str(out)]) == 0
    stored = json.loads((out / "config.json").read_text())
    assert stored["n_iterations"] == 4 and stored["seed"] == 4 and stored["d"] == 6
    assert (out / "traces" / "bocs-spinflip" / "instance_000.jsonl").exists()
    (out / "summary.csv").unlink()
    assert main(["report", "--output-dir", str(out)]) == 0
    assert (out / "summary.csv").exists()


def test_invalid_config_exit_code(tmp_path, capsys):
    assert main(["run", "--seed", "1", "--n-iterations", "0", "--output-dir",
                 str(tmp_path / "x")]) == 2
    assert "n_iterations" in capsys.readouterr().err


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "bocs_hedge.cli", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0
    for cmd in ("generate", "reference", "run", "report"):
        assert cmd in res.stdout
