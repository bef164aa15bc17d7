"""
LangGraph Sweep Orchestration

Drives the anisotropy sweep (evolve, measure, advance) and owns the sweep
records, feature detection and CSV persistence.
"""

from .workflow import (
    PIPELINE_VERSION,
    SweepState,
    run_sweep,
    run_sweep_workflow,
)

__all__ = ["PIPELINE_VERSION", "SweepState", "run_sweep", "run_sweep_workflow"]
