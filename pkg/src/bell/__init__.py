from src.bell.operators import MeasurementFrame, mermin_value, mk_expectation_mps, svetlichny_value
from src.bell.optimizer import FrameOptimizer, PlaneConstraint

__all__ = [
    "MeasurementFrame", "mermin_value", "mk_expectation_mps", "svetlichny_value",
    "FrameOptimizer", "PlaneConstraint",
]
