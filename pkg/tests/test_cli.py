import json
import subprocess
import sys
from pathlib import Path

import pytest

from lockspring.cli import PARETO_HEADER, SCHEMA_VERSION, main
from lockspring.config import ToolkitConfig

DATA = Path(__file__).parent / "data"


def run(*argv):
    proc = subprocess.run([sys.executable, "-m", "lockspring", *map(str, argv)],
                          capture_output=True, text=True, timeout=120)
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    trace = d / "trace.csv"
    assert main(["simulate", "--out", str(trace)]) == 0
    return d, trace


def test_clutch_text(capsys):
    assert main(["clutch"]) == 0
    out = capsys.readouterr().out
    assert "lambda_F < 0.001" in out
    assert "cable-limited" in out


def test_clutch_json(capsys):
    assert main(["clutch", "--json"]) == 0
    s = json.loads(capsys.readouterr().out)
    assert s["lambda_F"] == pytest.approx(5.065068068634871e-10, rel=1e-12)
    assert s["unlock_energy_J"] == pytest.approx(0.09)
    assert s["max_holding_force_N"] == 2700.0


def test_simulate_analyze(simulated, capsys):
    d, trace = simulated
    report, plot = d / "r.json", d / "p.svg"
    capsys.readouterr()
    assert main(["analyze", "--trace", str(trace), "--report", str(report), "--plot", str(plot)]) == 0
    assert capsys.readouterr().out == ""
    rep = json.loads(report.read_text())
    assert rep["schema_version"] == SCHEMA_VERSION
    assert rep["config"] == ToolkitConfig().to_dict()
    res = rep["results"]
    assert 0.74 <= res["eta"] <= 0.84
    assert res["segment_counts"]["lock-drop"] == 5
    assert res["events"][-1]["retained_force_N"] >= 1000
    assert "calibrated, not measured" in res["loss_model_note"]
    assert plot.read_text().lstrip().startswith("<?xml")
    assert "<svg" in plot.read_text()


def test_simulate_stdout_empty(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path / "t.csv")]) == 0
    assert capsys.readouterr().out == ""


def test_optimize_and_report(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[optimizer]\ngrid_budget = 256\n")
    r, f = tmp_path / "o.json", tmp_path / "front.csv"
    assert main(["optimize", "--config", str(cfg), "--report", str(r), "--front", str(f)]) == 0
    assert capsys.readouterr().out == ""
    rep = json.loads(r.read_text())
    assert rep["results"]["grid_points"] == 256
    assert rep["config"]["optimizer"]["grid_budget"] == 256
    lines = f.read_text().splitlines()
    assert lines[0] == ",".join(PARETO_HEADER)
    assert len(lines) - 1 == len(rep["results"]["pareto_front"])

    assert main(["report", "--inputs", str(r), "--config", str(cfg)]) == 0
    text = capsys.readouterr().out
    assert "ratchet-and-pawl reference" in text
    assert "0.632" in text and "0.680" in text
    assert "optimization report" in text


def test_report_to_file(tmp_path, capsys):
    out = tmp_path / "s.txt"
    assert main(["report", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert "rho_E" in out.read_text()


def test_empty_csv():
    code, out, err = run("analyze", "--trace", DATA / "empty.csv", "--report", "/dev/null")
    assert code != 0
    assert out == ""
    assert len(err.strip().splitlines()) == 1
    msg = json.loads(err)
    assert "no samples" in msg["message"]


def test_bad_config_located(tmp_path):
    code, _, err = run("clutch", "--config", DATA / "bad_value.ini")
    assert code == 1
    msg = json.loads(err)
    assert msg["error"] == "config"
    assert msg["line"] == 6


def test_infeasible_optimize(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[optimizer]\nmax_envelope_mm = 5\ngrid_budget = 16\n")
    code, _, err = run("optimize", "--config", cfg, "--report", tmp_path / "r", "--front", tmp_path / "f")
    assert code == 1
    msg = json.loads(err)
    assert msg["violation_counts"]["envelope exceeded"] == 16


def test_usage_error_is_json():
    code, _, err = run("simulate")
    assert code == 2
    assert json.loads(err)["error"] == "usage"


def test_deterministic_reports(simulated, tmp_path):
    _, trace = simulated
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["analyze", "--trace", str(trace), "--report", str(a)])
    main(["analyze", "--trace", str(trace), "--report", str(b)])
    assert a.read_text().replace(str(a), "") == b.read_text().replace(str(b), "")
