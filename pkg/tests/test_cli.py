import csv
import json

import numpy as np
import pytest

from qbmdiscord.cli import EXIT_CONFIG, EXIT_NUMERICS, EXIT_OK, EXIT_PARTIAL, PHASE_COLUMNS, main
from qbmdiscord.dynamics import TRAJECTORY_COLUMNS

FAST = ["--set", "environment.method=second_order"]


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_evolve_writes_trajectory(tmp_path, capsys):
    assert main(["evolve", "--out", str(tmp_path), "--set", "run.t_max=2", "--set", "run.dt_out=0.5", *FAST]) == EXIT_OK
    rows = read_csv(tmp_path / "trajectory.csv")
    assert tuple(rows[0].keys()) == TRAJECTORY_COLUMNS
    assert [float(r["t"]) for r in rows] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert str(tmp_path / "trajectory.csv") in capsys.readouterr().out


def test_coefficients_json(tmp_path):
    assert main(["coefficients", "--out", str(tmp_path), "--format", "json", "--set", "run.t_max=1", *FAST]) == EXIT_OK
    records = json.loads((tmp_path / "coefficients.json").read_text())
    assert len(records) == 11
    assert records[0]["t"] == 0.0


def test_symmetric_coefficients(tmp_path):
    args = ["coefficients", "--out", str(tmp_path), "--set", "system.coupling=symmetric", "--set", "run.t_max=1"]
    assert main(args) == EXIT_OK
    assert len(read_csv(tmp_path / "coefficients.csv")) == 11


def test_asymptotic_summary(tmp_path):
    args = ["asymptotic", "--out", str(tmp_path), "--set", "environment.temperature=0.35", "--set", "initial.r=0.15"]
    assert main(args) == EXIT_OK
    (row,) = read_csv(tmp_path / "asymptotic.csv")
    assert row["ent_phase"] == "SDR"
    assert float(row["phi_plus"]) > 0.5 and float(row["phi_minus"]) == 0.5


def test_phase_diagram_is_deterministic_across_workers(tmp_path):
    grid = ["--set", "sweep.r=0,0.5,1", "--set", "sweep.T=0.1,1,10"]
    assert main(["phase-diagram", "--out", str(tmp_path / "a"), "--workers", "1", *grid]) == EXIT_OK
    assert main(["phase-diagram", "--out", str(tmp_path / "b"), "--workers", "3", *grid]) == EXIT_OK
    a = (tmp_path / "a" / "phase_diagram.csv").read_bytes()
    assert a == (tmp_path / "b" / "phase_diagram.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "phase_diagram.csv")
    assert tuple(rows[0].keys()) == PHASE_COLUMNS
    assert [(float(r["r"]), float(r["T"])) for r in rows] == sorted((r, T) for r in (0, 0.5, 1) for T in (0.1, 1, 10))


def test_phase_diagram_phi_minus_sweep(tmp_path):
    args = ["phase-diagram", "--out", str(tmp_path), "--set", "sweep.r=1", "--set", "sweep.T=1", "--set", "sweep.phi_minus=0.5,1.5"]
    assert main(args) == EXIT_OK
    rows = read_csv(tmp_path / "phase_diagram.csv")
    assert list(rows[0].keys())[2] == "phi_minus"
    assert [float(r["phi_minus"]) for r in rows] == [0.5, 1.5]


def test_phase_diagram_reports_failed_cells(tmp_path, capsys):
    args = ["phase-diagram", "--out", str(tmp_path), "--set", "environment.gamma0=1", "--set", "sweep.r=1", "--set", "sweep.T=0,1", *FAST]
    assert main(args) == EXIT_PARTIAL
    rows = read_csv(tmp_path / "phase_diagram.csv")
    assert all(r["status"].startswith("error:") and np.isnan(float(r["EN_mean"])) for r in rows)
    assert "2 grid cell(s) failed" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["evolve", "--set", "system.mass=-1"],
        ["evolve", "--set", "nonsense"],
        ["asymptotic", "--config", "/nonexistent/run.ini"],
        ["phase-diagram", "--workers", "0"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert capsys.readouterr().err.startswith("config error:")


def test_numerical_failure_exits_3(tmp_path, capsys):
    args = ["asymptotic", "--out", str(tmp_path), "--set", "environment.gamma0=1", *FAST]
    assert main(args) == EXIT_NUMERICS
    assert "numerical failure" in capsys.readouterr().err


def test_validate_quick_passes(capsys):
    assert main(["validate", "--quick", "--seed", "3"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out and all(line.startswith("PASS") for line in out)


def test_validate_detects_injected_fault(capsys):
    assert main(["validate", "--quick", "--inject-fault", "entropy-sign"]) == EXIT_NUMERICS
    assert any(line.startswith("FAIL") for line in capsys.readouterr().out.splitlines())
