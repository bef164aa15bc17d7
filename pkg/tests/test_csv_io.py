#!/usr/bin/env python3
"""
Tests for the sweep results CSV
"""

import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.orchestrator.csv_io import COLUMNS, read_csv, read_provenance, write_csv
from src.orchestrator.records import SweepRecord
from src.utils.errors import MalformedCsv

HEADER = ("delta,n,objective,value_xy,value_xz,value_full,value_best,winning_plane,"
          "violation_order_m,depth_lower_bound,converged,frame_angles")


@pytest.fixture
def records():
    return [
        SweepRecord(delta=0.95, n=2, objective="mermin", value_xy=np.sqrt(2), value_xz=1.3,
                    value_full=np.sqrt(2), value_best=np.sqrt(2), winning_plane="xy",
                    violation_order_m=1, depth_lower_bound=2, converged=True,
                    frame_angles=[np.pi / 2, 0.0, np.pi / 2, np.pi / 4] * 2),
        SweepRecord(delta=1.0, n=6, objective="svetlichny", value_xy=1.1, value_xz=1.5,
                    value_best=1.5, winning_plane="xz", violation_order_m=2, converged=False,
                    frame_angles=[0.25] * 24),
        SweepRecord.failed(1.05, 6, "svetlichny"),
    ]


def test_round_trip(records, tmp_path):
    path = write_csv(records, tmp_path / "sweep.csv")
    assert read_csv(path) == records


def test_header_and_cells(records, tmp_path):
    path = write_csv(records, tmp_path / "sweep.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == HEADER
    assert ",".join(COLUMNS) == HEADER
    assert lines[1].startswith("0.95,2,mermin,1.41421356237,1.3,1.41421356237,1.41421356237,xy,1,2,true,")
    # no full-sphere value above four sites
    assert lines[2].split(",")[5] == ""
    assert lines[3] == "1.05,6,svetlichny,,,,,,0,1,false,"


def test_provenance_lines(records, tmp_path):
    provenance = {"version": "1.0.0", "offset": "even"}
    path = write_csv(records, tmp_path / "sweep.csv", provenance=provenance)
    text = path.read_text(encoding="utf-8")
    assert text.startswith("# version: 1.0.0\n# offset: even\n" + HEADER)
    assert read_provenance(path) == provenance
    assert read_csv(path) == records


def test_identical_inputs_give_identical_bytes(records, tmp_path):
    a = write_csv(records, tmp_path / "a.csv", provenance={"seed": "7"})
    b = write_csv(records, tmp_path / "b.csv", provenance={"seed": "7"})
    assert a.read_bytes() == b.read_bytes()


def test_rewrite_is_stable(records, tmp_path):
    first = write_csv(records, tmp_path / "first.csv")
    second = write_csv(read_csv(first), tmp_path / "second.csv")
    assert first.read_bytes() == second.read_bytes()


def test_empty_sweep(tmp_path):
    path = write_csv([], tmp_path / "empty.csv")
    assert path.read_text(encoding="utf-8") == HEADER + "\n"
    assert read_csv(path) == []


# ============================================================================
# Errors
# ============================================================================

def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_csv(tmp_path / "absent.csv")


def test_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("delta,n,objective\n1.0,2,mermin\n", encoding="utf-8")
    with pytest.raises(MalformedCsv):
        read_csv(path)


def test_bad_boolean(records, tmp_path):
    path = write_csv(records[:1], tmp_path / "sweep.csv")
    path.write_text(path.read_text(encoding="utf-8").replace(",true,", ",yes,"), encoding="utf-8")
    with pytest.raises(MalformedCsv):
        read_csv(path)


def test_bad_number(records, tmp_path):
    path = write_csv(records[:1], tmp_path / "sweep.csv")
    path.write_text(path.read_text(encoding="utf-8").replace("0.95,2,", "abc,2,"), encoding="utf-8")
    with pytest.raises(MalformedCsv):
        read_csv(path)


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(MalformedCsv):
        read_csv(path)
