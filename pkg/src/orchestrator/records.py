"""
Sweep records and the nonlocality / entanglement-depth classification.

For an n-site subchain the Mermin value certifies (n, n-m)-type nonlocality for
odd m once it exceeds 2^((m-1)/2); the Svetlichny combination does the same for
even m. The Mermin value also bounds the entanglement depth from below by m+1
for the largest m (of either parity) whose threshold it exceeds.
"""

from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, field_validator

SIGNIFICANT_DIGITS = 12

Objective = Literal["mermin", "svetlichny"]


def round_sig(x: Optional[float]) -> Optional[float]:
    """Round to 12 significant digits (the CSV precision)."""
    if x is None:
        return None
    return float(f"{x:.{SIGNIFICANT_DIGITS}g}")


def threshold(m: int) -> float:
    """Local bound 2^((m-1)/2) for the m-order inequality."""
    return 2.0 ** ((m - 1) / 2)


def violation_order(value: Optional[float], n: int, objective: str) -> int:
    """Largest m of the objective's parity (odd: mermin, even: svetlichny), m <= n-1, with value > 2^((m-1)/2)."""
    if value is None or np.isnan(value):
        return 0
    parity = 1 if objective == "mermin" else 0
    best = 0
    for m in range(1, n):
        if m % 2 == parity and value > threshold(m):
            best = m
    return best


def depth_lower_bound(value: Optional[float], n: int, objective: str) -> int:
    """Entanglement depth certified by a Mermin value; Svetlichny rows carry the trivial bound 1."""
    if objective != "mermin" or value is None or np.isnan(value):
        return 1
    best = 0
    for m in range(1, n):
        if value > threshold(m):
            best = m
    return best + 1


class SweepRecord(BaseModel):
    """One (delta, n, objective) point. Floats are stored rounded to CSV precision."""
    delta: float
    n: int
    objective: Objective
    value_xy: Optional[float] = None
    value_xz: Optional[float] = None
    value_full: Optional[float] = None
    value_best: Optional[float] = None
    winning_plane: Optional[Literal["xy", "xz"]] = None
    violation_order_m: int = 0
    depth_lower_bound: int = 1
    converged: bool = False
    frame_angles: List[float] = []

    @field_validator("delta", "value_xy", "value_xz", "value_full", "value_best")
    @classmethod
    def _round(cls, v):
        return round_sig(v)

    @field_validator("frame_angles")
    @classmethod
    def _round_angles(cls, angles):
        return [round_sig(a) for a in angles]

    @classmethod
    def from_comparison(cls, delta: float, n: int, objective: str, comparison,
                        converged: bool) -> "SweepRecord":
        """Build a record from a PlaneComparison of the frame optimizer."""
        value_best = round_sig(comparison.best.value)
        return cls(
            delta=delta,
            n=n,
            objective=objective,
            value_xy=comparison.xy.value,
            value_xz=comparison.xz.value,
            value_full=comparison.full.value if comparison.full is not None else None,
            value_best=value_best,
            winning_plane=comparison.winning_plane.value,
            violation_order_m=violation_order(value_best, n, objective),
            depth_lower_bound=depth_lower_bound(value_best, n, objective),
            converged=converged and all(
                r.converged for r in (comparison.xy, comparison.xz, comparison.full) if r is not None
            ),
            frame_angles=list(comparison.best.frame.angles()),
        )

    @classmethod
    def failed(cls, delta: float, n: int, objective: str) -> "SweepRecord":
        """Placeholder row for a point whose evaluation raised."""
        return cls(delta=delta, n=n, objective=objective, converged=False)


def classify_hierarchy(record: SweepRecord) -> List[str]:
    """
    Human-readable labels for a record.

    Example:
        n=8 mermin, value 1.05 -> ["(8,7)-type nonlocality", "entanglement depth >= 2"]
        n=10 svetlichny, value 1.45 -> ["(10,8)-type nonlocality"]
    """
    m = violation_order(record.value_best, record.n, record.objective)
    labels = [f"({record.n},{record.n - m})-type nonlocality" if m else "no violation"]
    if record.objective == "mermin":
        depth = depth_lower_bound(record.value_best, record.n, record.objective)
        labels.append(f"entanglement depth >= {depth}")
    return labels
