from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kamstab import kam, lindblad, matcore, models, spectral
from kamstab.acceptance import dephasing_setup
from kamstab.errors import NotPositive, NotState
from kamstab.models import SX, SY, SZ

from conftest import close, seeds


def test_vectorize_column_stacking():
    X = np.array([[1, 2], [3, 4]])
    assert close(lindblad.vectorize(X), [1, 3, 2, 4], 0)
    assert close(lindblad.devectorize([1, 3, 2, 4]), X, 0)
    with pytest.raises(ValueError):
        lindblad.devectorize(np.ones(5))


@given(seed=seeds, D=st.integers(2, 4))
def test_kron_identity(seed, D):
    rng = models.rng_for(seed)
    A, X, B = (models.complex_gaussian(rng, (D, D)) for _ in range(3))
    assert close(lindblad.left_right(A, B)(X), A @ X @ B, 1e-12)


def test_commutator_example():
    C = lindblad.commutator_super(SZ)
    assert close(C(SX), 2j * SY, 1e-15)
    assert close(C(SZ), 0, 0)


def test_dephasing_spectrum_and_action():
    L = lindblad.dephasing(1.0, 0.3)
    ev = np.linalg.eigvals(L.matrix)
    expected = [0, 0, -0.3 - 1j, -0.3 + 1j]
    assert close(np.sort_complex(np.round(ev, 12)), np.sort_complex(expected), 1e-12)
    rho = lindblad.bloch_state((0.3, 0.1, 0.5))
    out = L(rho)
    assert close(out[0, 1], (-0.3 - 1j) * rho[0, 1], 1e-14)
    assert close(np.diag(out), 0, 1e-15)
    assert L.trace_defect() <= 1e-15


@given(seed=seeds)
def test_lindbladian_preserves_trace_and_hermiticity(seed):
    H = models.random_hermitian(3, seed)
    rng = models.rng_for(seed)
    jumps = [models.complex_gaussian(rng, (3, 3)) for _ in range(2)]
    L = lindblad.lindbladian(H, jumps)
    assert L.trace_defect() <= 1e-12
    rho = np.eye(3) / 3 + 0.1 * models.random_hermitian(3, seed + 1)
    out = L(rho)
    assert close(out, out.conj().T, 1e-12)


def test_lindbladian_dimension_cap():
    with pytest.raises(ValueError):
        lindblad.lindbladian(np.eye(9))


def test_superoperator_from_map_and_algebra():
    A = models.random_hermitian(2, 3)
    S = lindblad.Superoperator.from_map(2, lambda X: A @ X - X @ A)
    assert close(S.matrix, lindblad.commutator_super(A).matrix, 1e-15)
    T = 2.0 * S + lindblad.identity_super(2)
    assert close(T(SX), 2 * (A @ SX - SX @ A) + SX, 1e-14)


def test_monotone_example_value():
    _, _, M_r, _, rho0 = dephasing_setup()
    assert lindblad.monotone(lindblad.MonotoneSpec(M_r), rho0) == pytest.approx(0.04, abs=1e-14)


@given(D=st.integers(2, 4), lam=st.floats(0, 3), seed=seeds)
def test_monotone_maximally_mixed(D, lam, seed):
    A = models.random_hermitian(D, seed)
    spec = lindblad.MonotoneSpec(lindblad.left_right(A, np.eye(D)), lam)
    expected = D / (1 + lam) * np.sum(np.abs(A / D) ** 2)
    assert lindblad.monotone(spec, np.eye(D) / D) == pytest.approx(expected, rel=1e-12)


def test_monotone_input_errors():
    spec = lindblad.MonotoneSpec(lindblad.identity_super(2))
    with pytest.raises(NotPositive):
        lindblad.monotone(spec, np.diag([1.0, 0.0]))
    with pytest.raises(NotState):
        lindblad.monotone(spec, np.diag([0.6, 0.6]))
    with pytest.raises(NotState):
        lindblad.monotone(spec, np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(ValueError):
        lindblad.MonotoneSpec(lindblad.identity_super(2), -1.0)


def test_robust_symmetry_commutes_with_generator():
    L = lindblad.dephasing(1.0, 1.0)
    resL = spectral.riesz_resolve(L.matrix)
    M = lindblad.robust_symmetry(resL, np.arange(resL.d, dtype=float))
    assert matcore.op_norm(M.matrix @ L.matrix - L.matrix @ M.matrix) <= 1e-10


def test_unperturbed_monotone_decays():
    L, V, M_r, _, rho0 = dephasing_setup()
    from kamstab.dynamics import TimeGrid

    grid = TimeGrid.linear(10.0, 200)
    free, pert = lindblad.monotone_traj(L, V, 0.0, lindblad.MonotoneSpec(M_r), rho0, grid)
    assert close(free.values, 0.04 * np.exp(-2 * grid.times), 1e-12)
    assert close(pert.values, free.values, 0)
    assert lindblad.max_increase(free) == 0.0
    assert lindblad.monotone_violation(free) == 0.0


def test_transported_symmetry_commutes_with_perturbed_generator():
    L, V, M_r, _, _ = dephasing_setup()
    eps = 0.1
    resL = spectral.riesz_resolve(L.matrix)
    kr = kam.isospectral_blockdiag_general(resL, V.matrix, eps)
    M_t = lindblad.transported_symmetry(kr, M_r)
    G = L.matrix + eps * V.matrix
    assert matcore.op_norm(M_t.matrix @ G - G @ M_t.matrix) <= 1e-8


def test_evolution_keeps_trace():
    L, V, _, _, rho0 = dephasing_setup()
    states = lindblad.evolve_states(L.matrix + 0.1 * V.matrix, rho0, np.linspace(0, 20, 30))
    assert close(np.trace(states, axis1=1, axis2=2), 1.0, 1e-12)


def test_max_increase_definition():
    from kamstab.dynamics import TimeGrid, Trajectory

    tr = Trajectory(TimeGrid.linear(1.0, 5), np.array([1.0, 0.5, 0.8, 0.2, 0.3]))
    assert lindblad.max_increase(tr) == pytest.approx(0.3)
    assert lindblad.monotone_violation(tr) == 0.0
