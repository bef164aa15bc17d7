"""
Multi-start Nelder-Mead maximization of Bell values over measurement frames.
"""

import logging
from enum import Enum
from typing import Callable, List, Optional, Union

import numpy as np
import scipy.optimize
from pydantic import BaseModel, InstanceOf

from src.bell.operators import (
    MeasurementFrame,
    mermin_value,
    mk_expectation_mps,
    svetlichny_value,
    correlation_matrix,
)
from src.mps.state import MpsState, ReducedDensityMatrix
from src.utils.errors import DimensionMismatch

logger = logging.getLogger(__name__)

OBJECTIVES = ("mermin", "svetlichny")
TIE_TOL = 1e-10


class PlaneConstraint(str, Enum):
    FULL = "full"
    XY = "xy"
    XZ = "xz"


class OptimizationResult(BaseModel):
    """Best frame found for one (objective, constraint) search."""

    objective: str
    n: int
    value: float
    frame: InstanceOf[MeasurementFrame]
    constraint: PlaneConstraint
    restarts_used: int
    best_restart_index: int
    converged: bool
    evaluations: int = 0


class PlaneComparison(BaseModel):
    """xy- and xz-plane optima, the full-sphere optimum when computed, and the winner."""

    best: OptimizationResult
    xy: OptimizationResult
    xz: OptimizationResult
    full: Optional[OptimizationResult] = None
    winning_plane: PlaneConstraint


def default_restarts(n: int) -> int:
    return 64 if n <= 6 else 128


def parameter_count(n: int, constraint: PlaneConstraint) -> int:
    return 4 * n if constraint == PlaneConstraint.FULL else 2 * n


def frame_from_parameters(params: np.ndarray, n: int, constraint: PlaneConstraint) -> MeasurementFrame:
    """
    Map an unconstrained parameter vector to a frame.

    full: (theta, phi) per direction; xy: one azimuth per direction (theta = pi/2);
    xz: one polar angle per direction (phi = 0). Directions are ordered
    a_1..a_n, a'_1..a'_n. All angles are periodic, so no bounds are needed.
    """
    params = np.asarray(params, dtype=float)
    if constraint == PlaneConstraint.FULL:
        thetas, phis = params[0::2], params[1::2]
        vecs = np.column_stack([np.sin(thetas) * np.cos(phis), np.sin(thetas) * np.sin(phis), np.cos(thetas)])
    elif constraint == PlaneConstraint.XY:
        vecs = np.column_stack([np.cos(params), np.sin(params), np.zeros_like(params)])
    else:
        vecs = np.column_stack([np.sin(params), np.zeros_like(params), np.cos(params)])
    return MeasurementFrame(a=vecs[:n], a_prime=vecs[n:])


def make_objective(objective: str, target: Union[ReducedDensityMatrix, MpsState],
                   offset: str = "average") -> Callable[[MeasurementFrame], float]:
    """Frame -> Bell value, dense for a density matrix and contracted for an MPS."""
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got '{objective}'")

    if isinstance(target, ReducedDensityMatrix):
        return (lambda f: mermin_value(target, f)) if objective == "mermin" \
            else (lambda f: svetlichny_value(target, f))

    if isinstance(target, MpsState):
        def evaluate(frame: MeasurementFrame) -> float:
            m, m_prime = mk_expectation_mps(target, frame, offset)
            return m if objective == "mermin" else (m + m_prime) / np.sqrt(2.0)
        return evaluate

    raise TypeError(f"Cannot evaluate Bell values on {type(target).__name__}")


def horodecki_m2(rho: ReducedDensityMatrix) -> float:
    """
    Closed-form maximal two-site Mermin value: sqrt(u1 + u2) for the two largest
    eigenvalues of T^T T (the CHSH maximum divided by 2).
    """
    if rho.n != 2:
        raise DimensionMismatch(f"Closed-form CHSH maximum needs n=2, got n={rho.n}")
    T = correlation_matrix(rho)
    u = np.sort(np.linalg.eigvalsh(T.T @ T))[::-1]
    return float(np.sqrt(max(0.0, u[0] + u[1])))


class FrameOptimizer:
    """
    Deterministic multi-start frame search.

    Usage:
        optimizer = FrameOptimizer(restarts=64, seed=1)
        result = optimizer.optimize("mermin", rho, n=4, constraint=PlaneConstraint.XY)
        planes = optimizer.optimize_both_planes("svetlichny", state, n=8)
    """

    def __init__(self, restarts: Optional[int] = None, seed: int = 0,
                 xatol: float = 1e-8, fatol: float = 1e-12, maxiter: int = 5000,
                 offset: str = "average"):
        """
        Args:
            restarts: local searches per call (default_restarts(n) when None)
            seed: base seed; restart r draws its start from default_rng([seed, r])
            xatol / fatol / maxiter: Nelder-Mead termination
            offset: unit-cell offset for the contracted MPS path
        """
        if restarts is not None and restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {restarts}")
        self.restarts = restarts
        self.seed = seed
        self.xatol = xatol
        self.fatol = fatol
        self.maxiter = maxiter
        self.offset = offset

    def optimize(self, objective: str, target: Union[ReducedDensityMatrix, MpsState], n: int,
                 constraint: Union[PlaneConstraint, str] = PlaneConstraint.FULL) -> OptimizationResult:
        constraint = PlaneConstraint(constraint)
        if isinstance(target, ReducedDensityMatrix) and target.n != n:
            raise DimensionMismatch(f"Density matrix covers {target.n} sites, requested n={n}")
        evaluate = make_objective(objective, target, self.offset)
        restarts = self.restarts or default_restarts(n)
        dim = parameter_count(n, constraint)

        def negated(params):
            return -evaluate(frame_from_parameters(params, n, constraint))

        best_x, best_val, best_idx = None, -np.inf, -1
        fallback_x, fallback_val, fallback_idx = None, -np.inf, -1
        any_converged = False
        evaluations = 0
        for r in range(restarts):
            rng = np.random.default_rng([self.seed, r])
            x0 = rng.uniform(0.0, 2.0 * np.pi, size=dim)
            res = scipy.optimize.minimize(
                negated, x0, method="Nelder-Mead",
                options={"xatol": self.xatol, "fatol": self.fatol, "maxiter": self.maxiter},
            )
            evaluations += int(res.nfev)
            value = -float(res.fun)
            if res.success:
                any_converged = True
                if value > best_val:
                    best_x, best_val, best_idx = res.x, value, r
            elif value > fallback_val:
                fallback_x, fallback_val, fallback_idx = res.x, value, r

        if best_x is None:
            logger.warning(f"[OPTIMIZER] All {restarts} restarts hit the iteration cap "
                           f"({objective}, n={n}, {constraint.value})")
            best_x, best_idx = fallback_x, fallback_idx

        frame = frame_from_parameters(best_x, n, constraint)
        value = evaluate(frame)
        logger.debug(f"[OPTIMIZER] {objective} n={n} {constraint.value}: {value:.10f} "
                     f"(restart {best_idx} of {restarts})")
        return OptimizationResult(
            objective=objective,
            n=n,
            value=value,
            frame=frame,
            constraint=constraint,
            restarts_used=restarts,
            best_restart_index=best_idx,
            converged=any_converged,
            evaluations=evaluations,
        )

    def optimize_both_planes(self, objective: str, target: Union[ReducedDensityMatrix, MpsState],
                             n: int, include_full: Optional[bool] = None) -> PlaneComparison:
        """
        xy and xz optima (plus full sphere for n <= 4). The plane winner and the
        overall best both break ties within 1e-10 towards xy.
        """
        if include_full is None:
            include_full = n <= 4
        xy = self.optimize(objective, target, n, PlaneConstraint.XY)
        xz = self.optimize(objective, target, n, PlaneConstraint.XZ)
        full = self.optimize(objective, target, n, PlaneConstraint.FULL) if include_full else None

        plane_winner = xz if xz.value > xy.value + TIE_TOL else xy
        candidates: List[OptimizationResult] = [xy, xz] + ([full] if full is not None else [])
        top = max(c.value for c in candidates)
        best = next(c for c in candidates if c.value >= top - TIE_TOL)
        return PlaneComparison(best=best, xy=xy, xz=xz, full=full, winning_plane=plane_winner.constraint)


def optimize(objective: str, rho_or_state: Union[ReducedDensityMatrix, MpsState], n: int,
             constraint: Union[PlaneConstraint, str] = PlaneConstraint.FULL,
             restarts: Optional[int] = None, seed: int = 0) -> OptimizationResult:
    return FrameOptimizer(restarts=restarts, seed=seed).optimize(objective, rho_or_state, n, constraint)


def optimize_both_planes(objective: str, rho_or_state: Union[ReducedDensityMatrix, MpsState], n: int,
                         restarts: Optional[int] = None, seed: int = 0) -> PlaneComparison:
    return FrameOptimizer(restarts=restarts, seed=seed).optimize_both_planes(objective, rho_or_state, n)
