"""
Self-contained property and oracle checks, runnable without any sweep.

Each check is a small function returning (passed, detail) and registered under
one suite name; `run_suite("all")` runs every suite.
"""

import logging
from functools import lru_cache
from typing import Callable, Dict, List, Tuple

import numpy as np
from pydantic import BaseModel

from src.bell.operators import (
    MeasurementFrame,
    mermin_value,
    mk_expectation_mps,
    mk_operators,
)
from src.bell.optimizer import FrameOptimizer, PlaneConstraint, horodecki_m2
from src.mps.itebd import EvolutionSchedule, ItebdEngine, energy_per_site, reference_energy
from src.mps.state import random_mps, reduced_density_matrix
from src.oracle.exact import (
    bell_singlet,
    density_matrix,
    exact_ground_state,
    ghz_state,
    mk_bruteforce,
    rdm_from_statevector,
    trace_distance,
    xx_ring_energy,
)
from src.utils.spin_linalg import direction_operator, hermitian_exp, kron, pauli, svd

logger = logging.getLogger(__name__)

SUITES = ("linalg", "bell", "rdm", "itebd")

CheckFn = Callable[[], Tuple[bool, str]]
_REGISTRY: Dict[str, List[Tuple[str, CheckFn]]] = {name: [] for name in SUITES}


class CheckResult(BaseModel):
    suite: str
    name: str
    passed: bool
    detail: str


def check(suite: str):
    """Register a check function under `suite`."""
    def decorator(fn: CheckFn) -> CheckFn:
        _REGISTRY[suite].append((fn.__name__, fn))
        return fn
    return decorator


def _random_frame(rng: np.random.Generator, n: int) -> MeasurementFrame:
    angles = rng.uniform(0, 2 * np.pi, size=(4, n))
    return MeasurementFrame.from_angles(*angles)


def _random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (A + A.conj().T)


# ============================================================================
# linalg
# ============================================================================

@check("linalg")
def pauli_involution() -> Tuple[bool, str]:
    dev = max(np.abs(pauli(a) @ pauli(a) - np.eye(2)).max() for a in "xyz")
    return dev < 1e-15, f"max |s^2 - I| = {dev:.1e}"


@check("linalg")
def direction_operator_squares_to_identity() -> Tuple[bool, str]:
    rng = np.random.default_rng(11)
    dev = 0.0
    for _ in range(1000):
        v = rng.normal(size=3)
        op = direction_operator(v / np.linalg.norm(v))
        dev = max(dev, np.abs(op @ op - np.eye(2)).max())
    return dev <= 1e-12, f"max deviation {dev:.1e} over 1000 directions"


@check("linalg")
def hermitian_exp_semigroup() -> Tuple[bool, str]:
    rng = np.random.default_rng(12)
    H = _random_hermitian(rng, 8)
    lhs = hermitian_exp(H, 0.3) @ hermitian_exp(H, 0.2)
    dev = np.abs(lhs - hermitian_exp(H, 0.5)).max()
    return dev <= 1e-10, f"deviation {dev:.1e}"


@check("linalg")
def svd_reconstruction() -> Tuple[bool, str]:
    rng = np.random.default_rng(13)
    A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    U, s, Vh = svd(A)
    dev = np.abs((U * s) @ Vh - A).max()
    return dev <= 1e-10, f"reconstruction error {dev:.1e}"


@check("linalg")
def kron_mixed_product() -> Tuple[bool, str]:
    rng = np.random.default_rng(14)
    A, B, C, D = (rng.normal(size=(2, 2)) for _ in range(4))
    dev = np.abs(kron(A, B) @ kron(C, D) - kron(A @ C, B @ D)).max()
    return dev <= 1e-12, f"deviation {dev:.1e}"


# ============================================================================
# bell
# ============================================================================

@check("bell")
def recursion_matches_expansion() -> Tuple[bool, str]:
    rng = np.random.default_rng(21)
    dev = 0.0
    for n in range(1, 5):
        for _ in range(5):
            frame = _random_frame(rng, n)
            dev = max(dev, np.abs(mk_operators(frame).M - mk_bruteforce(frame)).max())
    return dev <= 1e-12, f"max elementwise deviation {dev:.1e} for n <= 4"


@check("bell")
def spectral_bound() -> Tuple[bool, str]:
    rng = np.random.default_rng(22)
    worst = -np.inf
    for n in range(1, 7):
        for _ in range(10):
            M = mk_operators(_random_frame(rng, n)).M
            worst = max(worst, np.abs(np.linalg.eigvalsh(M)).max() - 2 ** ((n - 1) / 2))
    return worst <= 1e-9, f"max excess over 2^((n-1)/2): {worst:.2e}"


@check("bell")
def dense_matches_contracted() -> Tuple[bool, str]:
    rng = np.random.default_rng(23)
    state = random_mps(4, seed=23)
    dev = 0.0
    for n in (2, 4, 6, 8):
        rho = reduced_density_matrix(state, n)
        for _ in range(3):
            frame = _random_frame(rng, n)
            dev = max(dev, abs(mermin_value(rho, frame) - mk_expectation_mps(state, frame)[0]))
    return dev <= 1e-9, f"max |dense - contracted| = {dev:.1e}"


@check("bell")
def ghz_reaches_ceiling() -> Tuple[bool, str]:
    optimizer = FrameOptimizer(restarts=16, seed=5)
    details, ok = [], True
    for n in (2, 3, 4):
        rho = density_matrix(ghz_state(n))
        value = optimizer.optimize("mermin", rho, n, PlaneConstraint.XY).value
        ceiling = 2 ** ((n - 1) / 2)
        ok &= abs(value - ceiling) <= 1e-6
        details.append(f"n={n}: {value:.9f} (ceiling {ceiling:.9f})")
    return ok, "; ".join(details)


@check("bell")
def singlet_closed_form() -> Tuple[bool, str]:
    rho = density_matrix(bell_singlet())
    value = horodecki_m2(rho)
    return abs(value - np.sqrt(2)) <= 1e-12, f"closed form {value:.12f}"


# ============================================================================
# rdm
# ============================================================================

@check("rdm")
def partial_trace_consistency() -> Tuple[bool, str]:
    state = random_mps(6, seed=31)
    dev = 0.0
    for n in range(2, 9):
        rho_n = reduced_density_matrix(state, n).matrix.reshape(2 ** (n - 1), 2, 2 ** (n - 1), 2)
        traced = np.einsum("iaja->ij", rho_n)
        dev = max(dev, np.abs(traced - reduced_density_matrix(state, n - 1).matrix).max())
    return dev <= 1e-8, f"max deviation {dev:.1e} for n = 2..8"


@check("rdm")
def ghz_partial_trace() -> Tuple[bool, str]:
    rho = rdm_from_statevector(ghz_state(3), 0, 2).matrix
    expected = np.diag([0.5, 0, 0, 0.5])
    dev = np.abs(rho - expected).max()
    return dev <= 1e-12, f"deviation {dev:.1e}"


@check("rdm")
def ring_translation_invariance() -> Tuple[bool, str]:
    _, psi = exact_ground_state(10, 2.0)
    ref = rdm_from_statevector(psi, 0, 3)
    dev = max(trace_distance(ref, rdm_from_statevector(psi, k, 3)) for k in range(1, 8))
    return dev <= 1e-10, f"max trace distance {dev:.1e}"


@check("rdm")
def xx_ring_free_fermions() -> Tuple[bool, str]:
    energy, _ = exact_ground_state(8, 0.0)
    exact = xx_ring_energy(8)
    return abs(energy - exact) <= 1e-10, f"ED {energy:.12f} vs free fermions {exact:.12f}"


# ============================================================================
# itebd
# ============================================================================

ITEBD_DELTAS = (0.0, 0.5, 1.0, 2.0, 3.0)
ORACLE_RING = 16
GAPLESS_RDM_TOLERANCE = 2e-2
GAPPED_RDM_TOLERANCE = 5e-3
# slack on ED energies, whose finite-size shift has no fixed sign in the gapped phase
RING_ENERGY_SLACK = 5e-4


def _rdm_tolerance(delta: float) -> float:
    return GAPLESS_RDM_TOLERANCE if abs(delta) <= 1.0 else GAPPED_RDM_TOLERANCE


@lru_cache(maxsize=1)
def _itebd_grid_states():
    """Warm-started D=16 states and N=16 ring ground states on the oracle grid."""
    engine = ItebdEngine(D=16, schedule=EvolutionSchedule.quick(), seed=7)
    states, previous = {}, None
    for delta in ITEBD_DELTAS:
        state, _ = engine.ground_state(delta, initial_state=previous)
        e_ed, psi = exact_ground_state(ORACLE_RING, delta)
        states[delta] = (state, e_ed / ORACLE_RING, psi)
        previous = state
    return states


@check("itebd")
def energies_are_variational() -> Tuple[bool, str]:
    details, ok = [], True
    for delta, (state, e_ring, _) in _itebd_grid_states().items():
        e_mps = energy_per_site(state, delta)
        closed = reference_energy(delta)
        if closed is not None:
            ok &= e_mps >= closed - 1e-10
            details.append(f"Δ={delta:g}: {e_mps:.8f} >= {closed:.8f} (closed form)")
        else:
            ok &= e_mps >= e_ring - RING_ENERGY_SLACK
            ok &= abs(e_mps - e_ring) <= 2e-3
            details.append(f"Δ={delta:g}: {e_mps:.8f} vs ED({ORACLE_RING}) {e_ring:.8f}")
    return ok, "; ".join(details)


@check("itebd")
def rdms_match_ring() -> Tuple[bool, str]:
    details, ok = [], True
    for delta, (state, _, psi) in _itebd_grid_states().items():
        tolerance = _rdm_tolerance(delta)
        dist = max(
            trace_distance(reduced_density_matrix(state, n, "average"), rdm_from_statevector(psi, 0, n))
            for n in (2, 3, 4)
        )
        ok &= dist <= tolerance
        details.append(f"Δ={delta:g}: max trace distance {dist:.2e} (tolerance {tolerance:.0e})")
    return ok, "; ".join(details)


def run_suite(name: str) -> List[CheckResult]:
    """Run one suite (or 'all'); each check is isolated so one failure does not stop the rest."""
    suites = SUITES if name == "all" else (name,)
    unknown = [s for s in suites if s not in _REGISTRY]
    if unknown:
        raise ValueError(f"Unknown oracle suite '{name}', expected one of {SUITES + ('all',)}")

    results = []
    for suite in suites:
        for check_name, fn in _REGISTRY[suite]:
            try:
                passed, detail = fn()
            except Exception as e:
                passed, detail = False, f"{type(e).__name__}: {e}"
            level = logging.INFO if passed else logging.ERROR
            logger.log(level, f"[ORACLE] {suite}/{check_name}: {'PASS' if passed else 'FAIL'} ({detail})")
            results.append(CheckResult(suite=suite, name=check_name, passed=bool(passed), detail=detail))
    return results
