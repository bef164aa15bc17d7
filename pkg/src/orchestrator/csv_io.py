"""
CSV persistence for sweep records.

Floats are written with 12 significant digits, booleans as true/false, the best
frame as semicolon-separated angles and missing values as empty cells. Lines
starting with '#' above the header carry provenance and are skipped on read.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd

from src.orchestrator.records import SIGNIFICANT_DIGITS, SweepRecord
from src.utils.errors import MalformedCsv

logger = logging.getLogger(__name__)

COLUMNS = [
    "delta", "n", "objective", "value_xy", "value_xz", "value_full", "value_best",
    "winning_plane", "violation_order_m", "depth_lower_bound", "converged", "frame_angles",
]
FLOAT_COLUMNS = ("delta", "value_xy", "value_xz", "value_full", "value_best")


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.{SIGNIFICANT_DIGITS}g}"


def _row(record: SweepRecord) -> Dict[str, str]:
    row = {col: _fmt(getattr(record, col)) for col in FLOAT_COLUMNS}
    row.update({
        "n": str(record.n),
        "objective": record.objective,
        "winning_plane": record.winning_plane or "",
        "violation_order_m": str(record.violation_order_m),
        "depth_lower_bound": str(record.depth_lower_bound),
        "converged": "true" if record.converged else "false",
        "frame_angles": ";".join(_fmt(a) for a in record.frame_angles),
    })
    return row


def write_csv(records: Sequence[SweepRecord], path: Union[str, Path],
              provenance: Optional[Dict[str, str]] = None) -> Path:
    """
    Write records in the order given.

    Args:
        records: rows to write
        path: output file (parent directories are created)
        provenance: key/value pairs written as '# key: value' lines before the header;
            no timestamps, so identical runs give identical bytes
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame([_row(r) for r in records], columns=COLUMNS)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for key, value in (provenance or {}).items():
            f.write(f"# {key}: {value}\n")
        df.to_csv(f, index=False, lineterminator="\n")
    logger.info(f"[CSV] Wrote {len(records)} records to {path}")
    return path


def _parse_float(cell: str) -> Optional[float]:
    return float(cell) if cell != "" else None


def _parse_bool(cell: str) -> bool:
    if cell not in ("true", "false"):
        raise ValueError(f"expected true/false, got '{cell}'")
    return cell == "true"


def _parse_row(row: Dict[str, str]) -> SweepRecord:
    angles = row["frame_angles"]
    return SweepRecord(
        delta=float(row["delta"]),
        n=int(row["n"]),
        objective=row["objective"],
        value_xy=_parse_float(row["value_xy"]),
        value_xz=_parse_float(row["value_xz"]),
        value_full=_parse_float(row["value_full"]),
        value_best=_parse_float(row["value_best"]),
        winning_plane=row["winning_plane"] or None,
        violation_order_m=int(row["violation_order_m"]),
        depth_lower_bound=int(row["depth_lower_bound"]),
        converged=_parse_bool(row["converged"]),
        frame_angles=[float(a) for a in angles.split(";")] if angles else [],
    )


def read_csv(path: Union[str, Path]) -> List[SweepRecord]:
    """
    Read records written by write_csv.

    Raises:
        FileNotFoundError: path does not exist
        MalformedCsv: header differs from the record schema or a cell does not parse
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Results CSV not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, comment="#")
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise MalformedCsv(f"Cannot parse {path}: {e}")

    if list(df.columns) != COLUMNS:
        raise MalformedCsv(f"{path}: header {list(df.columns)} does not match {COLUMNS}")

    records = []
    for i, row in enumerate(df.to_dict(orient="records"), start=1):
        try:
            records.append(_parse_row(row))
        except (ValueError, TypeError) as e:
            raise MalformedCsv(f"{path}: row {i} is malformed ({e})")
    logger.info(f"[CSV] Read {len(records)} records from {path}")
    return records


def read_provenance(path: Union[str, Path]) -> Dict[str, str]:
    """The '# key: value' lines above the header."""
    provenance = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            provenance[key.strip()] = value.strip()
    return provenance
