#!/usr/bin/env python3
"""
Tests for the command-line entry point and its exit codes
"""

import os
import sys

# Add project root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import run
from src.orchestrator.csv_io import read_csv, read_provenance, write_csv
from src.orchestrator.records import SweepRecord


def sweep_result(nonconverged=(), converged=True):
    records = [
        SweepRecord(delta=d, n=2, objective="mermin", value_xy=v, value_xz=v, value_best=v,
                    winning_plane="xy", converged=converged, frame_angles=[0.0] * 8)
        for d, v in ((0.5, 1.2), (1.0, 1.1), (1.5, 1.3))
    ]
    return {"records": records, "errors": [], "nonconverged": list(nonconverged), "reports": []}


def test_sweep_writes_csv(mocker, tmp_path):
    run_workflow = mocker.patch.object(run, "run_sweep_workflow", return_value=sweep_result())
    out = tmp_path / "sweep.csv"
    code = run.main(["sweep", "--config", "quick_sweep", "--n", "2", "--D", "4", "--cold-start",
                     "--out", str(out)])
    assert code == run.EXIT_OK
    config = run_workflow.call_args.args[0]
    assert config.n_list == [2]
    assert config.D == 4
    assert not config.warm_start
    assert len(read_csv(out)) == 3
    assert read_provenance(out)["version"] == "1.0.0"


def test_sweep_nonconverged_exit_code(mocker, tmp_path):
    mocker.patch.object(run, "run_sweep_workflow", return_value=sweep_result(nonconverged=[1.0]))
    out = tmp_path / "sweep.csv"
    assert run.main(["sweep", "--config", "quick_sweep", "--out", str(out)]) == run.EXIT_NONCONVERGED
    # the CSV is still written
    assert out.exists()


def test_sweep_unconverged_rows_exit_code(mocker, tmp_path):
    mocker.patch.object(run, "run_sweep_workflow", return_value=sweep_result(converged=False))
    code = run.main(["sweep", "--config", "quick_sweep", "--out", str(tmp_path / "s.csv")])
    assert code == run.EXIT_NONCONVERGED


def test_quick_mode_from_environment(mocker, monkeypatch, tmp_path):
    monkeypatch.setenv("QUICK_MODE", "true")
    run_workflow = mocker.patch.object(run, "run_sweep_workflow", return_value=sweep_result())
    run.main(["sweep", "--config", "default_sweep", "--out", str(tmp_path / "s.csv")])
    assert run_workflow.call_args.args[0].quick


def test_missing_config_exit_code(tmp_path):
    assert run.main(["sweep", "--config", str(tmp_path / "absent.json")]) == run.EXIT_ERROR


def test_invalid_override_exit_code(tmp_path):
    assert run.main(["sweep", "--config", "quick_sweep", "--n", "20"]) == run.EXIT_ERROR


def test_features_mode(tmp_path):
    records = [
        SweepRecord(delta=d, n=2, objective="mermin", value_best=v, winning_plane="xy", converged=True)
        for d, v in ((0.0, 1.3), (0.5, 1.1), (1.0, 1.2))
    ]
    csv_path = write_csv(records, tmp_path / "sweep.csv")
    out = tmp_path / "features.json"
    assert run.main(["features", "--in", str(csv_path), "--out", str(out)]) == run.EXIT_OK
    assert out.exists()


def test_features_on_malformed_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n", encoding="utf-8")
    assert run.main(["features", "--in", str(bad), "--out", str(tmp_path / "f.json")]) == run.EXIT_ERROR


def test_oracle_mode():
    assert run.main(["oracle", "--check", "linalg"]) == run.EXIT_OK


def test_sweep_banner_and_summary_on_stdout(mocker, capsys, tmp_path):
    mocker.patch.object(run, "run_sweep_workflow", return_value=sweep_result(nonconverged=[1.0]))
    run.main(["sweep", "--config", "quick_sweep", "--out", str(tmp_path / "s.csv")])
    out = capsys.readouterr().out
    assert "XXZ BELL SWEEP" in out
    assert "SWEEP RESULTS" in out
    assert "n=2   mermin      max 1.300000 at Δ=1.5" in out
    assert "Not converged at Δ = 1" in out
