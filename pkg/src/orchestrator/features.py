"""
Grid-local feature detection on sweep curves.

Nothing is fitted or smoothed: a curve that is the max of two branches has
kinks, and three-point stencils keep them. Every feature carries the grid
points that bracket it.
"""

import json
import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import BaseModel

from src.orchestrator.records import SweepRecord, threshold
from src.utils.errors import InsufficientGrid

logger = logging.getLogger(__name__)

FLAT_TOL = 1e-12
MIN_POINTS = 3


class Feature(BaseModel):
    """An extremum or crossing located between delta_low and delta_high."""
    n: int
    objective: str
    delta: float
    delta_low: float
    delta_high: float


class PlaneCrossing(Feature):
    from_plane: str
    to_plane: str


class ViolationOnset(BaseModel):
    n: int
    objective: str
    m: int
    delta_low: float
    delta_high: float
    direction: Literal["onset", "loss"]


class FeatureReport(BaseModel):
    local_minima: List[Feature] = []
    local_maxima: List[Feature] = []
    plane_crossings: List[PlaneCrossing] = []
    violation_onsets: List[ViolationOnset] = []

    def minima_containing(self, delta: float, n: Optional[int] = None,
                          objective: Optional[str] = None) -> List[Feature]:
        """Minima whose bracket contains `delta` (optionally filtered by n / objective)."""
        return [
            f for f in self.local_minima
            if f.delta_low <= delta <= f.delta_high
            and (n is None or f.n == n)
            and (objective is None or f.objective == objective)
        ]


def _group(records: Sequence[SweepRecord]) -> Dict[Tuple[int, str], List[SweepRecord]]:
    groups: Dict[Tuple[int, str], List[SweepRecord]] = defaultdict(list)
    for r in records:
        if r.value_best is None:
            continue
        groups[(r.n, r.objective)].append(r)
    for rows in groups.values():
        rows.sort(key=lambda r: r.delta)
    return dict(sorted(groups.items()))


def _runs(values: List[float]) -> List[Tuple[int, int]]:
    """Index ranges [start, end] of consecutive values equal within FLAT_TOL."""
    runs = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or abs(values[i] - values[start]) > FLAT_TOL:
            runs.append((start, i - 1))
            start = i
    return runs


def _extrema(rows: List[SweepRecord], n: int, objective: str) -> Tuple[List[Feature], List[Feature]]:
    values = [r.value_best for r in rows]
    deltas = [r.delta for r in rows]
    runs = _runs(values)
    minima, maxima = [], []
    for k in range(1, len(runs) - 1):
        (s, e), (ps, _), (ns, _) = runs[k], runs[k - 1], runs[k + 1]
        here, before, after = values[s], values[ps], values[ns]
        centre = deltas[(s + e) // 2]
        feature = Feature(n=n, objective=objective, delta=centre,
                          delta_low=deltas[s - 1], delta_high=deltas[e + 1])
        if here < before and here < after:
            minima.append(feature)
        elif here > before and here > after:
            maxima.append(feature)
    return minima, maxima


def _crossings(rows: List[SweepRecord], n: int, objective: str) -> List[PlaneCrossing]:
    crossings = []
    for left, right in zip(rows, rows[1:]):
        if left.winning_plane and right.winning_plane and left.winning_plane != right.winning_plane:
            crossings.append(PlaneCrossing(
                n=n, objective=objective,
                delta=0.5 * (left.delta + right.delta),
                delta_low=left.delta, delta_high=right.delta,
                from_plane=left.winning_plane, to_plane=right.winning_plane,
            ))
    return crossings


def _onsets(rows: List[SweepRecord], n: int, objective: str) -> List[ViolationOnset]:
    parity = 1 if objective == "mermin" else 0
    onsets = []
    for m in range(1, n):
        if m % 2 != parity:
            continue
        bound = threshold(m)
        for left, right in zip(rows, rows[1:]):
            before, after = left.value_best > bound, right.value_best > bound
            if before != after:
                onsets.append(ViolationOnset(
                    n=n, objective=objective, m=m,
                    delta_low=left.delta, delta_high=right.delta,
                    direction="onset" if after else "loss",
                ))
    return onsets


def detect_features(records: Sequence[SweepRecord]) -> FeatureReport:
    """
    Local minima/maxima of value_best, xy/xz plane crossings and violation
    onsets, per (n, objective) curve. Failed points (no value) are skipped.

    Raises:
        InsufficientGrid: a curve has fewer than 3 usable points
    """
    groups = _group(records)
    if not groups:
        raise InsufficientGrid("No usable sweep records to analyse")

    report = FeatureReport()
    for (n, objective), rows in groups.items():
        if len(rows) < MIN_POINTS:
            raise InsufficientGrid(
                f"n={n} {objective}: {len(rows)} grid points, need at least {MIN_POINTS}"
            )
        minima, maxima = _extrema(rows, n, objective)
        report.local_minima.extend(minima)
        report.local_maxima.extend(maxima)
        report.plane_crossings.extend(_crossings(rows, n, objective))
        report.violation_onsets.extend(_onsets(rows, n, objective))

    logger.info(
        f"[FEATURES] {len(report.local_minima)} minima, {len(report.local_maxima)} maxima, "
        f"{len(report.plane_crossings)} plane crossings, {len(report.violation_onsets)} onsets"
    )
    return report


def write_report(report: FeatureReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.model_dump(), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"[FEATURES] Report written to {path}")
    return path
