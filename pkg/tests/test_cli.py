import json
import subprocess
import sys

import pytest

from ncts.cli import (EXIT_INFEASIBLE, EXIT_INVALID, EXIT_OK, EXIT_USAGE, load_preset,
                      run_command)


@pytest.fixture(scope="module")
def case_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("case1")
    assert run_command(["case", "case1", "--seed", "7", "--horizon", "3", "--out", str(out)]) \
        == EXIT_OK
    return out


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("inputs")
    doc = load_preset("case1")
    (d / "model.json").write_text(json.dumps(doc["model"]))
    (d / "preset.json").write_text(json.dumps(doc))
    (d / "scenario.json").write_text(json.dumps(doc["scenario"]))
    return d


def test_case_outputs(case_dir):
    cert = json.loads((case_dir / "certificate.json").read_text())
    assert cert["status"] == "feasible"
    stats = json.loads((case_dir / "stats.json").read_text())
    assert stats["seed"] == 7 and stats["samples"] == 30
    assert 0 < stats["ratio"] <= 1
    header = (case_dir / "trace.csv").read_text().splitlines()[0]
    assert header.startswith("t,")


def test_simulate_byte_identical(case_dir, files, tmp_path):
    outs = []
    for k in range(2):
        o = tmp_path / f"run{k}"
        code = run_command(["simulate", str(files / "preset.json"),
                            str(case_dir / "certificate.json"), str(files / "scenario.json"),
                            "--seed", "3", "--horizon", "2", "--out", str(o)])
        assert code == EXIT_OK
        outs.append((o / "trace.csv").read_bytes() + (o / "stats.json").read_bytes())
    assert outs[0] == outs[1]


def test_analyze(case_dir, files, tmp_path, capsys):
    code = run_command(["analyze", str(case_dir / "trace.csv"), str(files / "preset.json"),
                        "--certificate", str(case_dir / "certificate.json"),
                        "--out", str(tmp_path)])
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "analysis.json").read_text())
    assert doc["dissipativity"]["nonzero_initial_state"] is True
    assert len(doc["lkf"]["t"]) == len(doc["lkf"]["V"]) > 0
    assert "inequality not required" in capsys.readouterr().out


def test_infeasible_gamma_exit(files, tmp_path):
    code = run_command(["synthesize", str(files / "preset.json"), "--override", "gamma=50",
                        "--out", str(tmp_path)])
    assert code == EXIT_INFEASIBLE
    assert json.loads((tmp_path / "certificate.json").read_text())["status"] != "feasible"


@pytest.mark.parametrize("argv", [
    ["synthesize", "/nonexistent/model.json"],
    ["case", "case1", "--override", "nonsense=1"],
    ["case", "case1", "--override", "gamma"],
])
def test_invalid_input_exit(argv, tmp_path):
    assert run_command(argv + ["--out", str(tmp_path)]) == EXIT_INVALID


def test_bad_model_exit(files, tmp_path):
    doc = json.loads((files / "model.json").read_text())
    doc["mu"] = 1.5
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run_command(["synthesize", str(bad), "--out", str(tmp_path)]) == EXIT_INVALID


def test_usage_exit():
    assert run_command(["frobnicate"]) == EXIT_USAGE
    assert run_command(["case", "case9"]) == EXIT_USAGE


def test_verify(tmp_path):
    assert run_command(["verify", "--draws", "20", "--out", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert all(v >= -1e-8 for v in doc["lemmas"].values())
    assert all(doc["fixtures"].values())


def test_export_sdpa(files, tmp_path):
    assert run_command(["export-sdpa", str(files / "preset.json"), "--out", str(tmp_path)]) \
        == EXIT_OK
    lines = (tmp_path / "theorem2.dat-s").read_text().splitlines()
    assert lines[0].split()[0] == "99" and lines[1].split()[0] == "25"
    target = tmp_path / "sub" / "t1.dat-s"
    assert run_command(["export-sdpa", str(files / "preset.json"), "--theorem", "1",
                        "--out", str(target)]) == EXIT_OK
    assert target.exists()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ncts", "--version"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("ncts ")
