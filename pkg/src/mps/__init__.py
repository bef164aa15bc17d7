from src.mps.state import MpsState, ReducedDensityMatrix, canonicalize, reduced_density_matrix
from src.mps.itebd import EvolutionSchedule, ItebdEngine, XxzCoupling, ground_state

__all__ = [
    "MpsState", "ReducedDensityMatrix", "canonicalize", "reduced_density_matrix",
    "EvolutionSchedule", "ItebdEngine", "XxzCoupling", "ground_state",
]
