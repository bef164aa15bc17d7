#!/usr/bin/env python3
"""
Tests for the exact-diagonalization oracle and the runnable check suites
"""

import os
import sys

import numpy as np
import pytest
import sympy

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.bell.operators import MeasurementFrame, mk_operators
from src.mps.itebd import two_site_hamiltonian
from src.mps.state import product_mps
from src.oracle import suite
from src.oracle.exact import (
    StateVector,
    bell_singlet,
    density_matrix,
    exact_ground_state,
    ghz_state,
    mk_bruteforce,
    mk_coefficients,
    product_state,
    rdm_from_statevector,
    trace_distance,
    xx_ring_energy,
    xxz_hamiltonian,
)
from src.utils.errors import IndexOutOfRange, ResourceLimit


# ============================================================================
# Exact diagonalization
# ============================================================================

def test_two_site_ring_doubles_the_bond():
    """N=2 under periodic boundaries counts the single bond twice"""
    H = xxz_hamiltonian(2, 1.0).toarray()
    assert np.allclose(H, 2 * two_site_hamiltonian(1.0))
    energy, psi = exact_ground_state(2, 1.0)
    assert energy == pytest.approx(-6.0)
    assert abs(np.vdot(bell_singlet().amplitudes, psi.amplitudes)) == pytest.approx(1.0, abs=1e-10)


def test_hamiltonian_is_hermitian():
    H = xxz_hamiltonian(6, 0.7)
    assert abs(H - H.conj().T).max() <= 1e-14


@pytest.mark.parametrize("N", [4, 6, 8])
def test_xx_ring_matches_free_fermions(N):
    energy, _ = exact_ground_state(N, 0.0)
    assert energy == pytest.approx(xx_ring_energy(N), abs=1e-10)


def test_ed_resource_limit():
    with pytest.raises(ResourceLimit):
        xxz_hamiltonian(17, 1.0)
    with pytest.raises(ValueError):
        xxz_hamiltonian(1, 1.0)


def test_lanczos_path_agrees_with_dense_size():
    """N=12 runs through eigsh; in the gapped phase its energy per site is close to the dense N=10 one"""
    e12, psi = exact_ground_state(12, 2.0)
    assert psi.n_sites == 12
    assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0, abs=1e-10)
    e10, _ = exact_ground_state(10, 2.0)
    assert abs(e12 / 12 - e10 / 10) <= 5e-3


# ============================================================================
# State vectors and reduced density matrices
# ============================================================================

def test_reference_states():
    assert np.allclose(ghz_state(2).amplitudes, [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])
    assert np.allclose(bell_singlet().amplitudes, [0, 1 / np.sqrt(2), -1 / np.sqrt(2), 0])
    assert product_state("10").amplitudes[2] == 1
    with pytest.raises(ValueError):
        ghz_state(1)
    with pytest.raises(ValueError):
        product_state("012")


def test_state_vector_must_be_normalized():
    with pytest.raises(ValueError):
        StateVector(n_sites=1, amplitudes=[1.0, 1.0])
    with pytest.raises(ValueError):
        StateVector(n_sites=2, amplitudes=[1.0, 0.0])


def test_ghz_partial_trace():
    rho = rdm_from_statevector(ghz_state(3), 0, 2).matrix
    assert np.allclose(rho, np.diag([0.5, 0, 0, 0.5]), atol=1e-12)


def test_product_state_rdm_is_pure():
    rho = rdm_from_statevector(product_state("0110"), 1, 2).matrix
    assert np.trace(rho @ rho).real == pytest.approx(1.0)
    assert rho[3, 3] == pytest.approx(1.0)


def test_rdm_translation_invariance():
    _, psi = exact_ground_state(8, 2.0)
    ref = rdm_from_statevector(psi, 0, 3)
    for first in range(1, 6):
        assert trace_distance(ref, rdm_from_statevector(psi, first, 3)) <= 1e-10


def test_rdm_index_checks():
    with pytest.raises(IndexOutOfRange):
        rdm_from_statevector(ghz_state(3), 2, 2)
    with pytest.raises(IndexOutOfRange):
        rdm_from_statevector(ghz_state(3), -1, 2)


def test_trace_distance():
    up = density_matrix(product_state("0"))
    down = density_matrix(product_state("1"))
    assert trace_distance(up, up) == pytest.approx(0.0, abs=1e-15)
    assert trace_distance(up, down) == pytest.approx(1.0)
    assert trace_distance(up.matrix, np.eye(2) / 2) == pytest.approx(0.5)


# ============================================================================
# Brute-force Mermin-Klyshko expansion
# ============================================================================

def test_two_site_coefficients():
    coeffs = mk_coefficients(2)
    half = sympy.Rational(1, 2)
    assert {k: v[0] for k, v in coeffs.items()} == {
        (0, 0): half, (0, 1): half, (1, 0): half, (1, 1): -half,
    }


def test_bruteforce_matches_recursion():
    rng = np.random.default_rng(0)
    for n in range(1, 5):
        for _ in range(5):
            frame = MeasurementFrame.from_angles(*rng.uniform(0, 2 * np.pi, size=(4, n)))
            assert np.abs(mk_bruteforce(frame) - mk_operators(frame).M).max() <= 1e-12


def test_bruteforce_resource_limit():
    with pytest.raises(ResourceLimit):
        mk_coefficients(5)


# ============================================================================
# Check suites
# ============================================================================

def test_linalg_and_rdm_suites_pass():
    results = suite.run_suite("linalg") + suite.run_suite("rdm")
    failed = [f"{r.suite}/{r.name}: {r.detail}" for r in results if not r.passed]
    assert not failed
    assert {r.suite for r in results} == {"linalg", "rdm"}


def test_failing_check_is_reported_not_raised(mocker):
    def exploding_check():
        raise RuntimeError("boom")

    mocker.patch.dict(suite._REGISTRY, {"linalg": [("exploding_check", exploding_check)]})
    results = suite.run_suite("linalg")
    assert len(results) == 1
    assert not results[0].passed
    assert "boom" in results[0].detail


def test_itebd_checks_span_both_phases(mocker):
    assert suite.ITEBD_DELTAS == (0.0, 0.5, 1.0, 2.0, 3.0)
    assert [name for name, _ in suite._REGISTRY["itebd"]] == ["energies_are_variational", "rdms_match_ring"]
    assert suite._rdm_tolerance(1.0) == 2e-2
    assert suite._rdm_tolerance(2.0) == 5e-3

    # a fully polarized chain sits above the isotropic energy but has the wrong correlations
    energy, psi = exact_ground_state(8, 1.0)
    mocker.patch.object(suite, "_itebd_grid_states", return_value={1.0: (product_mps("up"), energy / 8, psi)})
    results = {r.name: r for r in suite.run_suite("itebd")}
    assert results["energies_are_variational"].passed
    assert not results["rdms_match_ring"].passed
    assert "Δ=1" in results["rdms_match_ring"].detail


def test_unknown_suite():
    with pytest.raises(ValueError):
        suite.run_suite("physics")


@pytest.mark.slow
def test_bell_and_itebd_suites_pass():
    results = suite.run_suite("bell") + suite.run_suite("itebd")
    failed = [f"{r.suite}/{r.name}: {r.detail}" for r in results if not r.passed]
    assert not failed
