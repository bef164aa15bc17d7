"""
Mermin-Klyshko Bell operators.

    M_1  = a_1 . sigma,   M'_1 = a'_1 . sigma
    M_k  = 1/2 M_{k-1} (x) (a_k + a'_k) . sigma + 1/2 M'_{k-1} (x) (a_k - a'_k) . sigma
    M'_k = 1/2 M'_{k-1} (x) (a'_k + a_k) . sigma + 1/2 M_{k-1} (x) (a'_k - a_k) . sigma

Local hidden-variable models bound <M_n> by 1 in this normalization; the
Svetlichny combination is (M_n + M'_n) / sqrt(2).

Two evaluation paths exist: dense operators against a reduced density matrix,
and a contraction that pushes the (M, M') pair of environments through an MPS
site by site without ever forming a 2^n matrix.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from src.mps.state import MpsState, ReducedDensityMatrix, environments, OFFSETS
from src.utils.errors import ConsistencyError, DimensionMismatch, ResourceLimit
from src.utils.spin_linalg import (
    direction_operator,
    kron,
    pauli,
    sigma_dot,
    unit_vector,
)

logger = logging.getLogger(__name__)

MAX_DENSE_SITES = 12
IMAG_TOL = 1e-9
SQRT2 = np.sqrt(2.0)


@dataclass
class MeasurementFrame:
    """Two measurement directions (a_k, a'_k) per site, stored as (n, 3) arrays."""
    a: np.ndarray
    a_prime: np.ndarray

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.a_prime = np.atleast_2d(np.asarray(self.a_prime, dtype=float))
        if self.a.shape != self.a_prime.shape or self.a.shape[1] != 3:
            raise DimensionMismatch(
                f"Frame needs two (n, 3) arrays of equal shape, got {self.a.shape} and {self.a_prime.shape}"
            )
        for v in np.vstack([self.a, self.a_prime]):
            # raises NonUnitVector
            direction_operator(v)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @classmethod
    def from_angles(cls, thetas: Sequence[float], phis: Sequence[float],
                    thetas_prime: Sequence[float], phis_prime: Sequence[float]) -> "MeasurementFrame":
        a = np.array([unit_vector(t, p) for t, p in zip(thetas, phis)])
        a_prime = np.array([unit_vector(t, p) for t, p in zip(thetas_prime, phis_prime)])
        return cls(a=a, a_prime=a_prime)

    @classmethod
    def from_angle_list(cls, angles: Sequence[float]) -> "MeasurementFrame":
        """Inverse of angles(): flat (theta, phi) pairs for a_1..a_n then a'_1..a'_n."""
        pairs = np.asarray(angles, dtype=float).reshape(-1, 2)
        if len(pairs) % 2:
            raise DimensionMismatch(f"Expected an even number of (theta, phi) pairs, got {len(pairs)}")
        n = len(pairs) // 2
        return cls.from_angles(pairs[:n, 0], pairs[:n, 1], pairs[n:, 0], pairs[n:, 1])

    def angles(self) -> np.ndarray:
        """(theta, phi) of a_1..a_n then a'_1..a'_n, flattened to 4n numbers."""
        vecs = np.vstack([self.a, self.a_prime])
        thetas = np.arccos(np.clip(vecs[:, 2], -1.0, 1.0))
        phis = np.arctan2(vecs[:, 1], vecs[:, 0])
        return np.column_stack([thetas, phis]).reshape(-1)


@dataclass
class BellOperatorPair:
    n: int
    M: np.ndarray
    M_prime: np.ndarray


def swap_frame(frame: MeasurementFrame) -> MeasurementFrame:
    """Exchange a_k and a'_k on every site."""
    return MeasurementFrame(a=frame.a_prime.copy(), a_prime=frame.a.copy())


def _recursion_terms(frame: MeasurementFrame, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Half-sum and half-difference operators (a_k +- a'_k) . sigma / 2 for site k >= 1."""
    a, ap = frame.a[k], frame.a_prime[k]
    return 0.5 * sigma_dot(a + ap), 0.5 * sigma_dot(a - ap)


def mk_operators(frame: MeasurementFrame) -> BellOperatorPair:
    """Dense (M_n, M'_n) built by the recursion."""
    if frame.n > MAX_DENSE_SITES:
        raise ResourceLimit(f"Dense Bell operators limited to n <= {MAX_DENSE_SITES}, got {frame.n}")
    M = direction_operator(frame.a[0])
    Mp = direction_operator(frame.a_prime[0])
    for k in range(1, frame.n):
        plus, minus = _recursion_terms(frame, k)
        M, Mp = kron(M, plus) + kron(Mp, minus), kron(Mp, plus) - kron(M, minus)
    return BellOperatorPair(n=frame.n, M=M, M_prime=Mp)


def svetlichny_operator(pair: BellOperatorPair) -> np.ndarray:
    return (pair.M + pair.M_prime) / SQRT2


def _check_dims(rho: ReducedDensityMatrix, frame: MeasurementFrame) -> None:
    if rho.n != frame.n:
        raise DimensionMismatch(f"Density matrix covers {rho.n} sites but the frame has {frame.n}")


def _trace_product(rho: np.ndarray, op: np.ndarray) -> float:
    value = np.einsum("ij,ji->", rho, op)
    if abs(value.imag) > IMAG_TOL:
        raise ConsistencyError(f"Bell expectation has imaginary residue {value.imag:.2e}")
    return float(value.real)


def mk_values(rho: ReducedDensityMatrix, frame: MeasurementFrame) -> Tuple[float, float]:
    """(Tr rho M_n, Tr rho M'_n)."""
    _check_dims(rho, frame)
    pair = mk_operators(frame)
    return _trace_product(rho.matrix, pair.M), _trace_product(rho.matrix, pair.M_prime)


def mermin_value(rho: ReducedDensityMatrix, frame: MeasurementFrame) -> float:
    _check_dims(rho, frame)
    return _trace_product(rho.matrix, mk_operators(frame).M)


def svetlichny_value(rho: ReducedDensityMatrix, frame: MeasurementFrame) -> float:
    m, m_prime = mk_values(rho, frame)
    return (m + m_prime) / SQRT2


def _transfer_op(G: np.ndarray, B: np.ndarray, op: np.ndarray) -> np.ndarray:
    """G -> sum_{s,t} op[s,t] B_s^dag G B_t, environments in (bra, ket) layout."""
    tmp = np.tensordot(G, B, axes=(1, 0))            # a, t, b'
    tmp = np.tensordot(op, tmp, axes=(1, 1))         # s, a, b'
    return np.tensordot(B.conj(), tmp, axes=([0, 1], [1, 0]))


def mk_expectation_mps(state: MpsState, frame: MeasurementFrame, offset: str = "even") -> Tuple[float, float]:
    """
    (<M_n>, <M'_n>) evaluated directly on a canonical MPS.

    The recursion is lifted to transfer space: the left environment is dressed
    with a_1.sigma and a'_1.sigma, and each further site mixes the pair linearly
    with (a_k +- a'_k).sigma / 2, exactly as the operators themselves are built.

    offset 'average' returns the mean over both unit-cell offsets, matching
    reduced_density_matrix(..., offset='average').

    Raises:
        NotCanonicalized
    """
    if offset == "average":
        even = mk_expectation_mps(state, frame, "even")
        odd = mk_expectation_mps(state, frame, "odd")
        return 0.5 * (even[0] + odd[0]), 0.5 * (even[1] + odd[1])
    if offset not in OFFSETS:
        raise ValueError(f"offset must be 'even', 'odd' or 'average', got '{offset}'")
    start = OFFSETS[offset]
    left, _ = environments(state, start)

    B = state.tensors[start % 2]
    G = _transfer_op(left, B, direction_operator(frame.a[0]))
    Gp = _transfer_op(left, B, direction_operator(frame.a_prime[0]))
    for k in range(1, frame.n):
        B = state.tensors[(start + k) % 2]
        plus, minus = _recursion_terms(frame, k)
        G, Gp = (
            _transfer_op(G, B, plus) + _transfer_op(Gp, B, minus),
            _transfer_op(Gp, B, plus) - _transfer_op(G, B, minus),
        )

    _, right = environments(state, start + frame.n)
    m = np.sum(G * right)
    m_prime = np.sum(Gp * right)
    for value in (m, m_prime):
        if abs(value.imag) > IMAG_TOL:
            raise ConsistencyError(f"Contracted Bell expectation has imaginary residue {value.imag:.2e}")
    return float(m.real), float(m_prime.real)


def svetlichny_value_mps(state: MpsState, frame: MeasurementFrame, offset: str = "even") -> float:
    m, m_prime = mk_expectation_mps(state, frame, offset)
    return (m + m_prime) / SQRT2


def correlation_matrix(rho: ReducedDensityMatrix) -> np.ndarray:
    """3x3 matrix T_ab = Tr(rho sigma_a (x) sigma_b) of a two-qubit state."""
    if rho.n != 2:
        raise DimensionMismatch(f"Correlation matrix needs a two-site density matrix, got n={rho.n}")
    axes = ("x", "y", "z")
    return np.array([
        [np.trace(rho.matrix @ kron(pauli(a), pauli(b))).real for b in axes]
        for a in axes
    ])
