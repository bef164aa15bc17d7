#!/usr/bin/env python3
"""
Tests for the spin-1/2 linear algebra helpers
"""

import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.utils.errors import NonUnitVector, NotHermitian
from src.utils.spin_linalg import (
    direction_operator,
    hermitian_eig,
    hermitian_exp,
    is_hermitian,
    kron,
    pauli,
    sigma_dot,
    svd,
    unit_vector,
)


def random_hermitian(rng, dim):
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (A + A.conj().T)


# ============================================================================
# Pauli algebra
# ============================================================================

def test_pauli_matrices():
    """Standard Pauli matrices, Hermitian, traceless and involutive"""
    assert np.array_equal(pauli("z"), np.diag([1, -1]))
    assert np.array_equal(pauli("x"), np.array([[0, 1], [1, 0]]))
    for axis in "xyz":
        s = pauli(axis)
        assert is_hermitian(s)
        assert abs(np.trace(s)) == 0
        assert np.allclose(s @ s, np.eye(2), atol=1e-15)


def test_pauli_rejects_unknown_axis():
    with pytest.raises(ValueError):
        pauli("w")


def test_pauli_returns_copy():
    s = pauli("x")
    s[0, 0] = 5
    assert pauli("x")[0, 0] == 0


def test_direction_operator_axes():
    assert np.allclose(direction_operator([0, 0, 1]), np.diag([1, -1]))
    assert np.allclose(direction_operator([1, 0, 0]), pauli("x"))
    w = np.linalg.eigvalsh(direction_operator([1 / np.sqrt(2), 0, 1 / np.sqrt(2)]))
    assert np.allclose(w, [-1, 1], atol=1e-12)


def test_direction_operator_squares_to_identity():
    """(a.sigma)^2 = I over 1000 random unit vectors"""
    rng = np.random.default_rng(0)
    for _ in range(1000):
        v = rng.normal(size=3)
        op = direction_operator(v / np.linalg.norm(v))
        assert np.abs(op @ op - np.eye(2)).max() <= 1e-12


def test_direction_operator_rejects_non_unit():
    with pytest.raises(NonUnitVector):
        direction_operator([1.0, 1.0, 0.0])
    # NonUnitVector is also a ValueError
    with pytest.raises(ValueError):
        direction_operator([0.0, 0.0, 1.1])


def test_sigma_dot_accepts_any_vector():
    assert np.allclose(sigma_dot([2.0, 0.0, 0.0]), 2 * pauli("x"))


def test_unit_vector():
    assert np.allclose(unit_vector(0.0, 0.0), [0, 0, 1])
    assert np.allclose(unit_vector(np.pi / 2, np.pi / 2), [0, 1, 0], atol=1e-15)


# ============================================================================
# Kronecker products
# ============================================================================

def test_kron_identity_and_zz():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.allclose(kron(pauli("z"), pauli("z")), np.diag([1, -1, -1, 1]))


def test_kron_mixed_product():
    rng = np.random.default_rng(1)
    A, B, C, D = (rng.normal(size=(2, 2)) for _ in range(4))
    assert np.allclose(kron(A, B) @ kron(C, D), kron(A @ C, B @ D), atol=1e-12)


def test_kron_associative():
    rng = np.random.default_rng(2)
    A, B, C = (rng.normal(size=(2, 2)) for _ in range(3))
    assert np.allclose(kron(kron(A, B), C), kron(A, kron(B, C)))
    assert np.allclose(kron(A, B, C), kron(A, kron(B, C)))


def test_kron_needs_a_factor():
    with pytest.raises(ValueError):
        kron()


# ============================================================================
# Eigendecomposition, exponential, SVD
# ============================================================================

def test_hermitian_eig_pauli():
    w, _ = hermitian_eig(pauli("z"))
    assert np.allclose(w, [-1, 1])
    w, V = hermitian_eig(pauli("x"))
    assert np.allclose(w, [-1, 1])
    assert abs(abs(np.vdot(V[:, 0], np.array([1, -1]) / np.sqrt(2))) - 1) < 1e-12


def test_hermitian_eig_reconstruction():
    rng = np.random.default_rng(3)
    A = random_hermitian(rng, 8)
    w, V = hermitian_eig(A)
    assert np.all(np.diff(w) >= 0)
    assert np.abs((V * w) @ V.conj().T - A).max() <= 1e-10
    assert np.abs(V.conj().T @ V - np.eye(8)).max() <= 1e-10


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_hermitian_exp():
    rng = np.random.default_rng(4)
    H = random_hermitian(rng, 8)
    assert np.allclose(hermitian_exp(H, 0.0), np.eye(8), atol=1e-12)
    assert np.allclose(hermitian_exp(pauli("z"), -1.0), np.diag([np.e ** -1, np.e]))
    assert np.abs(hermitian_exp(H, -0.4) @ hermitian_exp(H, 0.4) - np.eye(8)).max() <= 1e-10
    lhs = hermitian_exp(H, 0.3) @ hermitian_exp(H, 0.2)
    assert np.abs(lhs - hermitian_exp(H, 0.5)).max() <= 1e-10


def test_svd():
    _, s, _ = svd(np.eye(4))
    assert np.allclose(s, 1)
    _, s, _ = svd(np.diag([1.0, 3.0, 2.0]))
    assert np.allclose(s, [3, 2, 1])

    rng = np.random.default_rng(5)
    A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    U, s, Vh = svd(A)
    assert np.all(np.diff(s) <= 0)
    assert np.abs((U * s) @ Vh - A).max() <= 1e-10
