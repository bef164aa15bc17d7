"""
Dense complex linear algebra for spin-1/2 systems.

Pauli algebra, Kronecker products, Hermitian eigendecomposition, SVD and
Hermitian exponentials. Everything here is a pure function on numpy arrays;
matrices never exceed 4096 x 4096 in this project, so no sparse machinery.

Basis convention: index 0 is spin up (sigma_z = +1), index 1 is spin down.
"""

from functools import reduce
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

from src.utils.errors import ConvergenceFailure, NonUnitVector, NotHermitian

HERMITIAN_TOL = 1e-9
UNIT_TOL = 1e-9

IDENTITY_2 = np.eye(2, dtype=np.complex128)

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def pauli(axis: str) -> np.ndarray:
    """Return the Pauli matrix for axis 'x', 'y' or 'z' (a fresh copy)."""
    try:
        return PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"Unknown Pauli axis '{axis}', expected one of x, y, z")


def unit_vector(theta: float, phi: float) -> np.ndarray:
    """Spherical angles to (sin t cos p, sin t sin p, cos t)."""
    return np.array([
        np.sin(theta) * np.cos(phi),
        np.sin(theta) * np.sin(phi),
        np.cos(theta),
    ])


def sigma_dot(v: Sequence[float]) -> np.ndarray:
    """v . sigma for an arbitrary real 3-vector."""
    vx, vy, vz = (float(c) for c in v)
    return vx * PAULI["x"] + vy * PAULI["y"] + vz * PAULI["z"]


def direction_operator(a: Sequence[float]) -> np.ndarray:
    """
    a . sigma for a unit vector a.

    Raises:
        NonUnitVector: if | |a| - 1 | > 1e-9
    """
    a = np.asarray(a, dtype=float)
    norm = np.linalg.norm(a)
    if a.shape != (3,) or abs(norm - 1.0) > UNIT_TOL:
        raise NonUnitVector(f"Direction {a.tolist()} has norm {norm:.3e}, expected 1")
    return sigma_dot(a)


def kron(*matrices: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of factors; the first factor is the most significant."""
    if not matrices:
        raise ValueError("kron() needs at least one factor")
    return reduce(np.kron, matrices)


def is_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    return bool(np.max(np.abs(A - A.conj().T), initial=0.0) <= tol)


def _require_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    if not is_hermitian(A, tol):
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise NotHermitian(f"Expected a square matrix, got shape {A.shape}")
        dev = np.max(np.abs(A - A.conj().T))
        raise NotHermitian(f"Matrix deviates from Hermitian by {dev:.3e} (tolerance {tol:.0e})")


def hermitian_eig(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition A = V diag(w) V^dagger of a Hermitian matrix.

    Returns:
        (w, V) with w ascending and V unitary.

    Raises:
        NotHermitian
    """
    _require_hermitian(A)
    A = np.asarray(A, dtype=np.complex128)
    w, V = scipy.linalg.eigh(0.5 * (A + A.conj().T))
    return w, V


def hermitian_exp(A: np.ndarray, s: float) -> np.ndarray:
    """exp(s A) for Hermitian A, built from its eigendecomposition."""
    w, V = hermitian_eig(A)
    return (V * np.exp(s * w)) @ V.conj().T


def svd(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Thin SVD A = U diag(s) Vh with s descending.

    Falls back from the divide-and-conquer driver to the QR-iteration driver
    before giving up.

    Raises:
        ConvergenceFailure: if both LAPACK drivers fail
    """
    A = np.asarray(A)
    try:
        return scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError):
        pass
    try:
        return scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesvd")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailure(f"SVD of a {A.shape} matrix did not converge: {e}")
