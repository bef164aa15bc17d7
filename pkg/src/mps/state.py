"""
Infinite matrix product states with a two-site unit cell.

The state is stored in Vidal form as right-canonical tensors B_k = Gamma_k lambda_{k+1}
with shape (left bond, physical, right bond), plus the bond weights lambda_k that sit
to the left of site k. Bond 0 is the bond between site 1 of one cell and site 0 of
the next, bond 1 the bond inside the cell.

Environments are stored as (bra, ket) matrices: for the transfer matrix
T = sum_s conj(A_s) (x) A_s the left fixed point satisfies sum_s A_s^dag L A_s = L and the
right fixed point conj(A_s) R A_s^T = R. After canonicalization L = diag(lambda^2) and R = I.

Reduced density matrices follow the literal contraction
    rho_{i1..in, j1..jn} = <l| A*_{i1}...A*_{in} (x) A_{j1}...A_{jn} |r>
and are returned transposed, i.e. ket index on rows (rho = sum psi psi^dag).
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse.linalg

from src.utils.errors import (
    ConsistencyError,
    ConvergenceFailure,
    DegenerateDominantEigenvalue,
    NotCanonicalized,
    ResourceLimit,
)
from src.utils.spin_linalg import svd, _require_hermitian

logger = logging.getLogger(__name__)

PHYS_DIM = 2
MAX_RDM_SITES = 12
SVD_RELATIVE_CUTOFF = 1e-12
DEGENERACY_TOL = 1e-10
DENSE_SPECTRUM_LIMIT = 1024

OFFSETS = {"even": 0, "odd": 1}


@dataclass
class MpsState:
    """
    Translationally invariant infinite MPS with a two-site unit cell.

    Attributes:
        tensors: (B_0, B_1), each of shape (D_left, 2, D_right)
        weights: (lambda_0, lambda_1); lambda_k is the bond to the left of site k
        delta: anisotropy the state belongs to (None for synthetic states)
        canonical: True once canonicalize() produced exact Vidal form
        left_envs / right_envs: environments at bonds 0 and 1, (bra, ket) layout
        metadata: free-form provenance (seed, convergence info)
    """
    tensors: Tuple[np.ndarray, np.ndarray]
    weights: Tuple[np.ndarray, np.ndarray]
    delta: Optional[float] = None
    canonical: bool = False
    left_envs: Optional[Tuple[np.ndarray, np.ndarray]] = None
    right_envs: Optional[Tuple[np.ndarray, np.ndarray]] = None
    metadata: dict = field(default_factory=dict)

    @property
    def bond_dim(self) -> int:
        return int(max(len(w) for w in self.weights))

    @property
    def unit_cell(self) -> Tuple[Tuple[np.ndarray, np.ndarray], ...]:
        """The cell as pairs of matrices (A_0, A_1) per site, indexed by physical spin."""
        return tuple((B[:, 0, :], B[:, 1, :]) for B in self.tensors)

    def copy(self) -> "MpsState":
        return replace(
            self,
            tensors=tuple(B.copy() for B in self.tensors),
            weights=tuple(w.copy() for w in self.weights),
            left_envs=None if self.left_envs is None else tuple(e.copy() for e in self.left_envs),
            right_envs=None if self.right_envs is None else tuple(e.copy() for e in self.right_envs),
            metadata=dict(self.metadata),
        )


@dataclass
class ReducedDensityMatrix:
    """2^n x 2^n density matrix of a contiguous n-site subchain."""
    n: int
    matrix: np.ndarray
    offset: str = "even"

    def __post_init__(self):
        dim = 2 ** self.n
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"RDM for n={self.n} must be {dim}x{dim}, got {self.matrix.shape}")


class TransferMatrix:
    """
    Transfer map of a sequence of site tensors, T = sum_s conj(A_s) (x) A_s.

    The map is applied matrix-free (O(D^3) per site); `matrix` materializes the
    D^2 x D^2 dense form on demand.
    """

    def __init__(self, tensors: Sequence[np.ndarray]):
        if not tensors:
            raise ValueError("TransferMatrix needs at least one site tensor")
        self.tensors = [np.asarray(B, dtype=np.complex128) for B in tensors]
        self.dim_left = self.tensors[0].shape[0]
        self.dim_right = self.tensors[-1].shape[2]
        self._dense = None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.dim_left ** 2, self.dim_right ** 2

    def apply_right(self, R: np.ndarray) -> np.ndarray:
        """R[b, b'] -> sum_s conj(A_s) R A_s^T, sites applied last to first."""
        for B in reversed(self.tensors):
            tmp = np.tensordot(B.conj(), R, axes=(2, 0))
            R = np.tensordot(tmp, B, axes=([1, 2], [1, 2]))
        return R

    def apply_left(self, L: np.ndarray) -> np.ndarray:
        """L[a, a'] -> sum_s A_s^dag L A_s, sites applied first to last."""
        for B in self.tensors:
            tmp = np.tensordot(L, B, axes=(1, 0))
            L = np.tensordot(B.conj(), tmp, axes=([0, 1], [0, 1]))
        return L

    def matvec(self, v: np.ndarray) -> np.ndarray:
        d = self.dim_right
        return self.apply_right(v.reshape(d, d)).reshape(-1)

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        """Row-vector product v^T T, returned as a flat vector."""
        d = self.dim_left
        return self.apply_left(v.reshape(d, d)).reshape(-1)

    @property
    def matrix(self) -> np.ndarray:
        if self._dense is None:
            T = np.zeros(self.shape, dtype=np.complex128)
            for A in block_amplitudes(self.tensors):
                T += np.kron(A.conj(), A)
            self._dense = T
        return self._dense


class _DenseMap:
    """Adapter giving a plain square matrix the TransferMatrix interface."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Transfer matrix must be square, got {matrix.shape}")
        self.matrix = matrix
        self.shape = matrix.shape

    def matvec(self, v):
        return self.matrix @ v

    def rmatvec(self, v):
        return v @ self.matrix


def block_amplitudes(tensors: Sequence[np.ndarray]) -> np.ndarray:
    """
    Matrix products A_{s1}...A_{sk} for all 2^k physical strings.

    Returns:
        Array of shape (2^k, D_left, D_right); s1 is the most significant index.
    """
    P = np.transpose(tensors[0], (1, 0, 2))
    for B in tensors[1:]:
        P = np.tensordot(P, B, axes=(2, 0))
        P = np.transpose(P, (0, 2, 1, 3)).reshape(-1, P.shape[1], P.shape[3])
    return P


def product_mps(spin: str = "up") -> MpsState:
    """D=1 MPS of the uniform product state |up up ...> or |down down ...>."""
    if spin not in ("up", "down"):
        raise ValueError(f"spin must be 'up' or 'down', got '{spin}'")
    B = np.zeros((1, PHYS_DIM, 1), dtype=np.complex128)
    B[0, 0 if spin == "up" else 1, 0] = 1.0
    one = np.ones(1)
    state = MpsState(tensors=(B, B.copy()), weights=(one, one.copy()), metadata={"seed": None})
    return canonicalize(state)


def random_mps(D: int, seed: int) -> MpsState:
    """Random complex MPS with bond dimension D, reproducible from `seed`, canonicalized."""
    if D < 1:
        raise ValueError(f"Bond dimension must be >= 1, got {D}")
    rng = np.random.default_rng(seed)
    tensors = tuple(
        rng.normal(size=(D, PHYS_DIM, D)) + 1j * rng.normal(size=(D, PHYS_DIM, D))
        for _ in range(2)
    )
    weights = tuple(np.full(D, 1.0 / np.sqrt(D)) for _ in range(2))
    state = MpsState(tensors=tensors, weights=weights, metadata={"seed": int(seed)})
    return canonicalize(state, D_max=D)


def transfer_matrix(state: MpsState) -> TransferMatrix:
    """Transfer matrix of the full unit cell (site 0 then site 1)."""
    return TransferMatrix(list(state.tensors))


def _as_map(T):
    if isinstance(T, (TransferMatrix, _DenseMap)):
        return T
    return _DenseMap(T)


def _spectrum(T, k: int = 2) -> np.ndarray:
    """Leading eigenvalues by modulus, descending."""
    dim = T.shape[0]
    if dim <= DENSE_SPECTRUM_LIMIT:
        vals = np.linalg.eigvals(T.matrix)
    else:
        op = scipy.sparse.linalg.LinearOperator(T.shape, matvec=T.matvec, dtype=np.complex128)
        vals = scipy.sparse.linalg.eigs(op, k=k, which="LM", tol=1e-12, return_eigenvectors=False)
    return vals[np.argsort(-np.abs(vals))][:k]


def _power_iteration(apply: Callable, v0: np.ndarray, tol: float, max_iter: int,
                     rng: np.random.Generator, max_restarts: int = 3):
    """Normalized power iteration with restart when the residual stagnates."""
    v = v0 / np.linalg.norm(v0)
    best_res, best_at = np.inf, 0
    restarts = 0
    for it in range(max_iter):
        w = apply(v)
        lam = np.vdot(v, w)
        res = np.linalg.norm(w - lam * v)
        if res <= tol * max(1.0, abs(lam)):
            return lam, v, True
        if res < 0.5 * best_res:
            best_res, best_at = res, it
        elif it - best_at > 500:
            if restarts >= max_restarts:
                break
            restarts += 1
            logger.debug(f"[MPS] Power iteration stagnated at residual {res:.2e}, restart {restarts}")
            v = rng.normal(size=v.shape) + 1j * rng.normal(size=v.shape)
            best_res, best_at = np.inf, it
            v /= np.linalg.norm(v)
            continue
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v, True
        v = w / norm
    return lam, v, False


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate v so that its first non-negligible component is real positive."""
    idx = np.flatnonzero(np.abs(v) > 1e-8)
    if idx.size == 0:
        return v
    c = v[idx[0]]
    return v * (abs(c) / c)


def _resolve_degenerate(T, reference: Optional[np.ndarray]):
    """
    Pick one eigenpair from a degenerate dominant cluster.

    With a reference (previous fixed point) the right eigenvector of maximal overlap
    wins; otherwise candidates are phase-fixed and the lexicographically largest is taken.
    """
    vals, vecs = np.linalg.eig(T.matrix)
    order = np.argsort(-np.abs(vals))
    top = np.abs(vals[order[0]])
    cluster = [i for i in order if top - np.abs(vals[i]) < DEGENERACY_TOL]
    candidates = [_fix_phase(vecs[:, i] / np.linalg.norm(vecs[:, i])) for i in cluster]
    if reference is not None:
        ref = reference / np.linalg.norm(reference)
        pick = int(np.argmax([abs(np.vdot(ref, c)) for c in candidates]))
    else:
        keys = [tuple(np.round(np.concatenate([c.real, c.imag]), 8)) for c in candidates]
        pick = max(range(len(candidates)), key=lambda i: keys[i])
    lam = vals[cluster[pick]]
    right = candidates[pick]
    lvals, lvecs = np.linalg.eig(T.matrix.T)
    lcluster = [i for i in range(len(lvals)) if abs(lvals[i] - lam) < DEGENERACY_TOL * 10]
    left = max((lvecs[:, i] for i in lcluster), key=lambda l: abs(np.dot(l, right)))
    return lam, left, right


def dominant_eigenpair(T: Union[TransferMatrix, np.ndarray],
                       reference: Optional[np.ndarray] = None,
                       strict: bool = True,
                       tol: float = 1e-12,
                       max_iter: int = 20000,
                       seed: int = 0) -> Tuple[complex, np.ndarray, np.ndarray]:
    """
    Dominant eigenvalue with left and right eigenvectors of a transfer matrix.

    The right vector satisfies T r = lam r, the left vector l^T T = lam l^T, and the
    pair is normalized to l . r = 1 (bilinear). Power iteration runs from the
    identity environment, which is the exact fixed point of a canonical state.

    Args:
        reference: previous right fixed point, used to break a degenerate tie
        strict: raise on degeneracy instead of resolving it

    Raises:
        DegenerateDominantEigenvalue: if strict and the two largest moduli differ by < 1e-10
        ConvergenceFailure: if neither power iteration nor the dense fallback converge
    """
    T = _as_map(T)
    dim = T.shape[0]

    if dim >= 2:
        spectrum = _spectrum(T)
        if abs(abs(spectrum[0]) - abs(spectrum[1])) < DEGENERACY_TOL and abs(spectrum[0]) > 0:
            if strict:
                raise DegenerateDominantEigenvalue(
                    f"Leading transfer eigenvalues {spectrum[0]:.12g} and {spectrum[1]:.12g} are degenerate"
                )
            logger.warning("[MPS] Degenerate dominant eigenvalue, resolving by tie-break rule")
            lam, left, right = _resolve_degenerate(T, reference)
            return _normalize_pair(lam, left, right)

    rng = np.random.default_rng(seed)
    side = int(round(np.sqrt(dim)))
    if side * side == dim:
        start = np.eye(side, dtype=np.complex128).reshape(-1)
    else:
        start = np.ones(dim, dtype=np.complex128)
    if reference is not None and reference.shape == start.shape:
        start = reference.astype(np.complex128)

    lam_r, right, ok_r = _power_iteration(T.matvec, start, tol, max_iter, rng)
    lam_l, left, ok_l = _power_iteration(lambda v: T.rmatvec(v.conj()).conj(), start, tol, max_iter, rng)
    left = left.conj()

    if not (ok_r and ok_l):
        if dim > 4 * DENSE_SPECTRUM_LIMIT:
            raise ConvergenceFailure(f"Power iteration on a {dim}-dimensional transfer matrix did not converge")
        logger.warning("[MPS] Power iteration did not reach tolerance, using dense eigensolver")
        vals, vecs = np.linalg.eig(T.matrix)
        i = int(np.argmax(np.abs(vals)))
        lam_r, right = vals[i], vecs[:, i]
        lvals, lvecs = np.linalg.eig(T.matrix.T)
        left = lvecs[:, int(np.argmin(np.abs(lvals - lam_r)))]

    return _normalize_pair(lam_r, left, right)


def _normalize_pair(lam, left, right):
    right = _fix_phase(right / np.linalg.norm(right))
    overlap = np.dot(left, right)
    if abs(overlap) < 1e-14:
        raise ConvergenceFailure("Left and right dominant eigenvectors are orthogonal")
    left = left / overlap
    return complex(lam), left, right


def _hermitian_part(M: np.ndarray) -> np.ndarray:
    tr = np.trace(M)
    if abs(tr) > 0:
        M = M * (abs(tr) / tr)
    return 0.5 * (M + M.conj().T)


def canonicalize(state: MpsState, D_max: Optional[int] = None) -> MpsState:
    """
    Bring a two-site-cell MPS to exact Vidal canonical form.

    The cell tensor C = B_0 B_1 is gauge-transformed with the square roots of its
    transfer-matrix fixed points, diagonalized on the outer bond and split again by
    SVD on the inner bond. The result has dominant transfer eigenvalue 1, right
    environment I and left environment diag(lambda^2) on both bonds.
    """
    B0, B1 = (np.asarray(B, dtype=np.complex128) for B in state.tensors)
    D_max = D_max or state.bond_dim
    Dl = B0.shape[0]
    d = B0.shape[1]

    cell = np.tensordot(B0, B1, axes=(2, 0)).reshape(Dl, d * d, B1.shape[2])
    T = TransferMatrix([cell])
    reference = None
    if state.right_envs is not None and state.right_envs[0].shape == (Dl, Dl):
        reference = state.right_envs[0].reshape(-1)
    lam, l_vec, r_vec = dominant_eigenpair(T, reference=reference, strict=False)
    if abs(lam) == 0.0:
        raise ConvergenceFailure("Transfer matrix of the unit cell vanishes")
    cell = cell / np.sqrt(lam)

    # right fixed point in (ket, bra) layout is R^T; left fixed point is L as stored
    R = _hermitian_part(r_vec.reshape(Dl, Dl).T)
    L = _hermitian_part(l_vec.reshape(Dl, Dl))

    w, W = np.linalg.eigh(R)
    keep = w > 1e-14 * w.max()
    X = W[:, keep] * np.sqrt(w[keep])
    X_inv = (W[:, keep] / np.sqrt(w[keep])).conj().T
    Bc = np.einsum("ia,asb,bj->isj", X_inv, cell, X)

    mu, U = np.linalg.eigh(X.conj().T @ L @ X)
    order = np.argsort(mu)[::-1]
    mu, U = mu[order], U[:, order]
    keep = mu > 1e-28 * mu[0]
    mu, U = mu[keep], U[:, keep]
    lam0 = np.sqrt(mu)
    lam0 /= np.linalg.norm(lam0)
    Bc = np.einsum("ai,asb,bj->isj", U.conj(), Bc, U)

    k = len(lam0)
    cell4 = Bc.reshape(k, d, d, k)
    theta = (lam0[:, None, None, None] * cell4).reshape(k * d, d * k)
    _, s, Vh = svd(theta)
    rank = int(np.sum(s > SVD_RELATIVE_CUTOFF * s[0]))
    chi = min(D_max, rank)
    s = s[:chi] / np.linalg.norm(s[:chi])
    Vh = Vh[:chi]
    new_B1 = Vh.reshape(chi, d, k)
    new_B0 = np.tensordot(cell4, Vh.conj().reshape(chi, d, k), axes=([2, 3], [1, 2]))

    weights = (lam0, s)
    left_envs = tuple(np.diag(w ** 2).astype(np.complex128) for w in weights)
    right_envs = tuple(np.eye(len(w), dtype=np.complex128) for w in weights)
    result = MpsState(
        tensors=(new_B0, new_B1),
        weights=weights,
        delta=state.delta,
        canonical=True,
        left_envs=left_envs,
        right_envs=right_envs,
        metadata=dict(state.metadata),
    )
    if chi < rank:
        # the truncated cell has inner rank <= D_max, so one more pass is exact
        logger.debug(f"[MPS] Inner bond truncated {rank} -> {chi}, re-canonicalizing")
        return canonicalize(replace(result, canonical=False), D_max=D_max)
    return result


def require_canonical(state: MpsState) -> None:
    if not state.canonical or state.left_envs is None or state.right_envs is None:
        raise NotCanonicalized("State must be canonicalized first (call canonicalize())")


def environments(state: MpsState, offset: int) -> Tuple[np.ndarray, np.ndarray]:
    """(left, right) environments at the bond to the left of site `offset`."""
    require_canonical(state)
    return state.left_envs[offset % 2], state.right_envs[offset % 2]


def _site_sequence(state: MpsState, offset: int, n: int):
    return [state.tensors[(offset + k) % 2] for k in range(n)]


def _rdm_at_offset(state: MpsState, n: int, offset: int) -> np.ndarray:
    left, _ = environments(state, offset)
    _, right = environments(state, offset + n)
    sites = _site_sequence(state, offset, n)

    n1 = (n + 1) // 2
    P1 = block_amplitudes(sites[:n1])
    tmp = np.tensordot(left, P1, axes=(1, 1))                 # a, J, c'
    Lh = np.tensordot(P1.conj(), tmp, axes=(1, 0))            # I, c, J, c'
    if n1 == n:
        rho_eq = np.tensordot(Lh, right, axes=([1, 3], [0, 1]))
    else:
        P2 = block_amplitudes(sites[n1:])
        tmp = np.tensordot(P2, right, axes=(2, 1))            # M, c', e
        Rh = np.tensordot(P2.conj(), tmp, axes=(2, 2))        # K, c, M, c'
        rho_eq = np.tensordot(Lh, Rh, axes=([1, 3], [1, 3]))  # I, J, K, M
        rho_eq = np.transpose(rho_eq, (0, 2, 1, 3))
    dim = 2 ** n
    return rho_eq.reshape(dim, dim).T


def reduced_density_matrix(state: MpsState, n: int, offset: str = "even") -> ReducedDensityMatrix:
    """
    Density matrix of n contiguous sites starting at the given unit-cell offset.

    offset is 'even', 'odd' or 'average' (mean over both offsets). The result is
    symmetrized and trace-normalized.

    Raises:
        NotCanonicalized, ResourceLimit (n > 12)
    """
    require_canonical(state)
    if n < 1:
        raise ValueError(f"Subchain length must be >= 1, got {n}")
    if n > MAX_RDM_SITES:
        raise ResourceLimit(f"Dense RDM limited to n <= {MAX_RDM_SITES} sites, got {n}")
    if offset == "average":
        rho = 0.5 * (_rdm_at_offset(state, n, 0) + _rdm_at_offset(state, n, 1))
    elif offset in OFFSETS:
        rho = _rdm_at_offset(state, n, OFFSETS[offset])
    else:
        raise ValueError(f"offset must be 'even', 'odd' or 'average', got '{offset}'")
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return ReducedDensityMatrix(n=n, matrix=rho, offset=offset)


def expectation_local(state: MpsState, op: np.ndarray, start_site_parity: str = "even") -> float:
    """
    <op> on k = log2(dim op) consecutive sites starting at an even or odd site.

    Raises:
        NotHermitian, ConsistencyError (imaginary residue above 1e-9)
    """
    op = np.asarray(op, dtype=np.complex128)
    _require_hermitian(op)
    k = int(round(np.log2(op.shape[0])))
    if 2 ** k != op.shape[0] or not 1 <= k <= 4:
        raise ValueError(f"Local operator must act on 1 to 4 sites, got dimension {op.shape[0]}")
    rho = reduced_density_matrix(state, k, start_site_parity)
    value = np.trace(rho.matrix @ op)
    if abs(value.imag) > 1e-9:
        raise ConsistencyError(f"Expectation value has imaginary residue {value.imag:.2e}")
    return float(value.real)


def correlation_length(state: MpsState) -> float:
    """Correlation length in sites from the two leading cell transfer eigenvalues."""
    T = transfer_matrix(state)
    if T.shape[0] < 2:
        return 0.0
    t1, t2 = np.abs(_spectrum(T))
    if t2 <= 1e-300:
        return 0.0
    ratio = t2 / t1
    if ratio >= 1.0 - 1e-14:
        return float("inf")
    return float(-2.0 / np.log(ratio))


def entanglement_entropy(state: MpsState, bond: int = 0) -> float:
    """Von Neumann entropy -sum lambda^2 ln lambda^2 across a bond."""
    p = np.asarray(state.weights[bond % 2]) ** 2
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))
