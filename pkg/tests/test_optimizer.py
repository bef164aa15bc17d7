#!/usr/bin/env python3
"""
Tests for the multi-start frame optimizer
"""

import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.bell.operators import mermin_value, svetlichny_value
from src.bell.optimizer import (
    FrameOptimizer,
    PlaneConstraint,
    default_restarts,
    frame_from_parameters,
    horodecki_m2,
    make_objective,
    optimize,
    optimize_both_planes,
    parameter_count,
)
from src.mps.state import ReducedDensityMatrix, random_mps, reduced_density_matrix
from src.oracle.exact import bell_singlet, density_matrix, ghz_state, product_state
from src.utils.errors import DimensionMismatch


@pytest.fixture(scope="module")
def singlet():
    return density_matrix(bell_singlet())


# ============================================================================
# Parameterization
# ============================================================================

def test_parameter_counts_and_defaults():
    assert parameter_count(3, PlaneConstraint.FULL) == 12
    assert parameter_count(3, PlaneConstraint.XY) == 6
    assert parameter_count(3, PlaneConstraint.XZ) == 6
    assert default_restarts(2) == 64
    assert default_restarts(6) == 64
    assert default_restarts(8) == 128


def test_plane_frames_stay_in_plane():
    params = np.random.default_rng(0).uniform(0, 2 * np.pi, size=6)
    xy = frame_from_parameters(params, 3, PlaneConstraint.XY)
    assert np.allclose(xy.a[:, 2], 0) and np.allclose(xy.a_prime[:, 2], 0)
    xz = frame_from_parameters(params, 3, PlaneConstraint.XZ)
    assert np.allclose(xz.a[:, 1], 0) and np.allclose(xz.a_prime[:, 1], 0)
    full = frame_from_parameters(np.concatenate([params, params]), 3, PlaneConstraint.FULL)
    assert full.n == 3


def test_objective_dispatch(singlet):
    frame = frame_from_parameters(np.arange(4, dtype=float), 2, PlaneConstraint.XY)
    assert make_objective("mermin", singlet)(frame) == mermin_value(singlet, frame)
    assert make_objective("svetlichny", singlet)(frame) == svetlichny_value(singlet, frame)

    state = random_mps(3, seed=4)
    rho = reduced_density_matrix(state, 2, "average")
    for objective in ("mermin", "svetlichny"):
        contracted = make_objective(objective, state)(frame)
        dense = make_objective(objective, rho)(frame)
        assert contracted == pytest.approx(dense, abs=1e-10)

    with pytest.raises(ValueError):
        make_objective("chsh", singlet)
    with pytest.raises(TypeError):
        make_objective("mermin", np.eye(4))


# ============================================================================
# Closed form
# ============================================================================

def test_horodecki_closed_form(singlet):
    assert horodecki_m2(singlet) == pytest.approx(np.sqrt(2), abs=1e-12)
    assert horodecki_m2(density_matrix(product_state("00"))) == pytest.approx(1.0, abs=1e-12)
    mixed = ReducedDensityMatrix(n=2, matrix=np.eye(4) / 4)
    assert horodecki_m2(mixed) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        horodecki_m2(density_matrix(ghz_state(3)))


# ============================================================================
# Optimization
# ============================================================================

def test_singlet_xy_optimum(singlet):
    result = optimize("mermin", singlet, 2, PlaneConstraint.XY, restarts=8, seed=1)
    assert result.value == pytest.approx(np.sqrt(2), abs=1e-6)
    assert result.constraint == PlaneConstraint.XY
    assert result.restarts_used == 8
    assert 0 <= result.best_restart_index < 8
    assert result.converged
    assert mermin_value(singlet, result.frame) == pytest.approx(result.value, abs=1e-9)


def test_ghz3_reaches_ceiling():
    rho = density_matrix(ghz_state(3))
    result = FrameOptimizer(restarts=16, seed=5).optimize("mermin", rho, 3, "xy")
    assert result.value == pytest.approx(2.0, abs=1e-6)


def test_full_sphere_matches_closed_form_on_random_state():
    rho = reduced_density_matrix(random_mps(3, seed=8), 2)
    result = optimize("mermin", rho, 2, PlaneConstraint.FULL, restarts=16, seed=2)
    assert result.value == pytest.approx(horodecki_m2(rho), abs=1e-4)
    assert result.value <= horodecki_m2(rho) + 1e-9


def test_optimizer_is_deterministic(singlet):
    a = FrameOptimizer(restarts=4, seed=3).optimize("svetlichny", singlet, 2, "xz")
    b = FrameOptimizer(restarts=4, seed=3).optimize("svetlichny", singlet, 2, "xz")
    assert a.value == b.value
    assert np.array_equal(a.frame.angles(), b.frame.angles())


def test_more_restarts_never_hurt():
    rho = reduced_density_matrix(random_mps(3, seed=11), 3)
    few = FrameOptimizer(restarts=2, seed=6).optimize("mermin", rho, 3, "xy")
    many = FrameOptimizer(restarts=8, seed=6).optimize("mermin", rho, 3, "xy")
    assert many.value >= few.value - 1e-12


def test_both_planes(singlet):
    planes = optimize_both_planes("mermin", singlet, 2, restarts=8, seed=1)
    assert planes.full is not None
    assert planes.xy.value == pytest.approx(np.sqrt(2), abs=1e-6)
    assert planes.xz.value == pytest.approx(np.sqrt(2), abs=1e-6)
    # equal planes resolve to xy
    assert planes.winning_plane == PlaneConstraint.XY
    top = max(planes.xy.value, planes.xz.value, planes.full.value)
    assert planes.best.value == pytest.approx(top, abs=1e-10)
    assert planes.full.value >= max(planes.xy.value, planes.xz.value) - 1e-6


def test_both_planes_skips_full_above_four_sites():
    rho = reduced_density_matrix(random_mps(2, seed=12), 5)
    planes = FrameOptimizer(restarts=1, seed=0, maxiter=200).optimize_both_planes("mermin", rho, 5)
    assert planes.full is None
    assert planes.best.constraint in (PlaneConstraint.XY, PlaneConstraint.XZ)


def test_optimizer_argument_checks(singlet):
    with pytest.raises(ValueError):
        FrameOptimizer(restarts=0)
    with pytest.raises(DimensionMismatch):
        FrameOptimizer(restarts=1).optimize("mermin", singlet, 3)
