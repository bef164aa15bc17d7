"""
Exact reference data: periodic XXZ rings by exact diagonalization, state-vector
reduced density matrices, reference states and the explicitly expanded
Mermin-Klyshko operator.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
import sympy

from src.bell.operators import MeasurementFrame
from src.mps.itebd import XxzCoupling, as_coupling
from src.mps.state import ReducedDensityMatrix
from src.utils.errors import IndexOutOfRange, ResourceLimit
from src.utils.spin_linalg import direction_operator, kron

logger = logging.getLogger(__name__)

MAX_ED_SITES = 16
DENSE_ED_SITES = 10
MAX_BRUTEFORCE_SITES = 4
NORM_TOL = 1e-10


@dataclass
class StateVector:
    """Normalized pure state of n spins; site 1 is the most significant index."""
    n_sites: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.amplitudes.size != 2 ** self.n_sites:
            raise ValueError(f"{self.n_sites} sites need {2 ** self.n_sites} amplitudes, "
                             f"got {self.amplitudes.size}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"State vector norm is {norm:.12f}, expected 1")


def _site_bits(N: int) -> np.ndarray:
    """bits[i, b] = occupation (0 = up, 1 = down) of site i in basis state b."""
    states = np.arange(2 ** N)
    return (states[None, :] >> (N - 1 - np.arange(N))[:, None]) & 1


def xxz_hamiltonian(N: int, c: Union[XxzCoupling, float]) -> scipy.sparse.csr_matrix:
    """
    Sparse periodic Hamiltonian sum_i h_{i,i+1} with site N+1 = site 1.

    All N bonds are summed, so N=2 counts the single bond twice.
    """
    c = as_coupling(c)
    if N < 2:
        raise ValueError(f"A ring needs at least 2 sites, got {N}")
    if N > MAX_ED_SITES:
        raise ResourceLimit(f"Exact diagonalization limited to N <= {MAX_ED_SITES}, got {N}")

    dim = 2 ** N
    states = np.arange(dim)
    bits = _site_bits(N)
    diag = np.zeros(dim)
    rows, cols = [states], [states]
    vals = []
    off_rows, off_cols, off_vals = [], [], []
    for i in range(N):
        j = (i + 1) % N
        zi = 1 - 2 * bits[i]
        zj = 1 - 2 * bits[j]
        diag += c.delta * zi * zj
        # sx sx + sy sy = 2 (s+ s- + s- s+) flips antiparallel pairs with amplitude 2
        flip = bits[i] != bits[j]
        mask = (1 << (N - 1 - i)) | (1 << (N - 1 - j))
        off_rows.append(states[flip] ^ mask)
        off_cols.append(states[flip])
        off_vals.append(np.full(int(flip.sum()), 2.0))
    vals.append(diag)

    H = scipy.sparse.coo_matrix(
        (np.concatenate(vals + off_vals), (np.concatenate(rows + off_rows), np.concatenate(cols + off_cols))),
        shape=(dim, dim),
    )
    return H.tocsr()


def _fix_global_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > 1e-8 * np.abs(v).max()))
    return v * (abs(v[k]) / v[k])


def exact_ground_state(N: int, c: Union[XxzCoupling, float]) -> Tuple[float, StateVector]:
    """
    Lowest eigenpair of the N-site periodic chain.

    Dense diagonalization up to N=10, Lanczos (eigsh, tol 1e-10) above.

    Raises:
        ResourceLimit: N > 16
    """
    H = xxz_hamiltonian(N, c)
    if N <= DENSE_ED_SITES:
        w, V = scipy.linalg.eigh(H.toarray())
        energy, vec = float(w[0]), V[:, 0]
    else:
        v0 = np.random.default_rng(0).normal(size=H.shape[0])
        w, V = scipy.sparse.linalg.eigsh(H, k=1, which="SA", tol=1e-10, v0=v0)
        energy, vec = float(w[0]), V[:, 0]
    vec = _fix_global_phase(vec / np.linalg.norm(vec))
    logger.debug(f"[ORACLE] ED N={N}: E0={energy:.12f} (E0/N={energy / N:.12f})")
    return energy, StateVector(n_sites=N, amplitudes=vec)


def xx_ring_energy(N: int) -> float:
    """
    Free-fermion ground energy of the Delta=0 ring. After the Jordan-Wigner map the
    hopping band is 4 cos k, with periodic momenta for odd and antiperiodic
    momenta for even fermion number.
    """
    best = 0.0
    for n_f in range(N + 1):
        shift = 0.5 if n_f % 2 == 0 else 0.0
        ks = 2 * np.pi * (np.arange(N) + shift) / N
        eps = np.sort(4 * np.cos(ks))
        best = min(best, float(eps[:n_f].sum()))
    return best


def rdm_from_statevector(state: StateVector, first_site: int, n: int) -> ReducedDensityMatrix:
    """Partial trace onto sites first_site .. first_site+n-1 (0-based)."""
    N = state.n_sites
    if n < 1 or first_site < 0 or first_site + n > N:
        raise IndexOutOfRange(f"Sites [{first_site}, {first_site + n}) outside a {N}-site chain")
    psi = state.amplitudes.reshape(2 ** first_site, 2 ** n, 2 ** (N - first_site - n))
    rho = np.einsum("aib,ajb->ij", psi, psi.conj())
    return ReducedDensityMatrix(n=n, matrix=rho, offset=f"site {first_site}")


def ghz_state(n: int) -> StateVector:
    if n < 2:
        raise ValueError(f"GHZ state needs n >= 2, got {n}")
    amps = np.zeros(2 ** n, dtype=np.complex128)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return StateVector(n_sites=n, amplitudes=amps)


def bell_singlet() -> StateVector:
    return StateVector(n_sites=2, amplitudes=np.array([0, 1, -1, 0]) / np.sqrt(2))


def product_state(bits: Union[str, Sequence[int]]) -> StateVector:
    """Computational basis state, e.g. product_state("0110"); 0 is spin up."""
    bits = [int(b) for b in bits]
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"Bits must be 0 or 1, got {bits}")
    amps = np.zeros(2 ** len(bits), dtype=np.complex128)
    amps[int("".join(map(str, bits)), 2)] = 1.0
    return StateVector(n_sites=len(bits), amplitudes=amps)


def density_matrix(state: StateVector) -> ReducedDensityMatrix:
    """|psi><psi| of the whole chain."""
    return rdm_from_statevector(state, 0, state.n_sites)


def trace_distance(rho, sigma) -> float:
    """1/2 sum |eig(rho - sigma)|; accepts ReducedDensityMatrix or raw matrices."""
    a = rho.matrix if isinstance(rho, ReducedDensityMatrix) else np.asarray(rho)
    b = sigma.matrix if isinstance(sigma, ReducedDensityMatrix) else np.asarray(sigma)
    diff = a - b
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def mk_coefficients(n: int) -> Dict[Tuple[int, ...], Tuple[sympy.Rational, sympy.Rational]]:
    """
    Exact expansion of (M_n, M'_n) over correlator strings.

    Keys are strings of 0 (a_k) and 1 (a'_k) per site; values the rational
    coefficients of that string in M_n and in M'_n.
    """
    if n > MAX_BRUTEFORCE_SITES:
        raise ResourceLimit(f"Explicit expansion limited to n <= {MAX_BRUTEFORCE_SITES}, got {n}")
    half = sympy.Rational(1, 2)
    coeffs = {(0,): (sympy.Integer(1), sympy.Integer(0)), (1,): (sympy.Integer(0), sympy.Integer(1))}
    for _ in range(1, n):
        expanded = {}
        for string, (cM, cMp) in coeffs.items():
            expanded[string + (0,)] = (half * (cM + cMp), half * (cMp - cM))
            expanded[string + (1,)] = (half * (cM - cMp), half * (cMp + cM))
        coeffs = expanded
    return coeffs


def mk_bruteforce(frame: MeasurementFrame) -> np.ndarray:
    """M_n summed explicitly over its 2^n correlator strings."""
    coeffs = mk_coefficients(frame.n)
    ops = [(direction_operator(frame.a[k]), direction_operator(frame.a_prime[k])) for k in range(frame.n)]
    M = np.zeros((2 ** frame.n, 2 ** frame.n), dtype=np.complex128)
    for string, (cM, _) in coeffs.items():
        if cM == 0:
            continue
        M += float(cM) * kron(*(ops[k][choice] for k, choice in enumerate(string)))
    return M
