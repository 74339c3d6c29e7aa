from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kamstab import kam, matcore, models, spectral, symmetry
from kamstab.errors import DegenerateTrivial, InvalidBound, LevelCrossing
from kamstab.models import SX, SY, SZ

from conftest import close, seeds, small_dims

TWO = spectral.resolve(SZ)


def _instance(seed: int, dim: int):
    H = models.degenerate_hermitian(dim, seed) if seed % 2 else models.random_hermitian(dim, seed)
    return spectral.resolve(H), models.random_hermitian(dim, seed + 1)


# --- homological equation ------------------------------------------------------

def test_homological_two_level():
    K = kam.solve_homological(TWO, SX)
    assert close(K, -SY / 2, 1e-15)
    assert close(1j * (SZ @ K - K @ SZ), -SX, 1e-15)


def test_homological_block_diagonal_v():
    res = spectral.resolve(np.diag([1.0, 1.0, 2.0]))
    V = np.diag([0.3, -0.2, 1.0]).astype(complex)
    assert close(kam.solve_homological(res, V), 0, 0)


def test_homological_single_level_warns():
    res = spectral.resolve(np.eye(2))
    with pytest.warns(DegenerateTrivial):
        K = kam.solve_homological(res, SX)
    assert close(K, 0, 0)


@given(seed=seeds, dim=st.sampled_from([4, 8, 16]))
def test_homological_residual_gauge_and_bound(seed, dim):
    res, V = _instance(seed, dim)
    K = kam.solve_homological(res, V)
    assert kam.homological_residual(res, K, V) <= 1e-10 * matcore.op_norm(V)
    assert close(K, K.conj().T, 1e-13)
    assert matcore.op_norm(symmetry.zeno_project(res, K)) <= 1e-12
    assert matcore.op_norm(K) <= kam.first_order_generator_bound(res, V) * (1 + 1e-12)


# --- second-order series ---------------------------------------------------------

def test_series_two_level():
    s = kam.series_order2(TWO, SX)
    assert close(s.V0, 0, 1e-15)
    assert close(s.V1, SZ / 2, 1e-12)
    assert close(s.K1, -SY / 2, 1e-15)


def test_series_block_diagonal_v():
    res = spectral.resolve(np.diag([1.0, 1.0, 2.0]))
    V = np.array([[0.1, 0.2, 0], [0.2, -0.3, 0], [0, 0, 0.5]], dtype=complex)
    s = kam.series_order2(res, V)
    assert close(s.V0, V, 0) and close(s.V1, 0, 0) and close(s.K1, 0, 0) and close(s.K2, 0, 0)


@given(seed=seeds, dim=small_dims)
def test_series_terms_structure(seed, dim):
    res, V = _instance(seed, dim)
    s = kam.series_order2(res, V)
    assert close(s.V1, s.V1.conj().T, 1e-12)
    assert close(symmetry.offdiag(res, s.V1), 0, 1e-10 / res.gap)
    # V_1 is also the block-diagonal part of i[V - {V}/2, K_1]
    assert close(s.V1, symmetry.zeno_project(res, s.K2_source), 1e-10 / res.gap)
    # K_2 solves its own homological equation, with zero block-diagonal part
    H = res.reconstruct()
    resid = 1j * (H @ s.K2 - s.K2 @ H) + symmetry.offdiag(res, s.K2_source)
    assert matcore.op_norm(resid) <= 1e-10 * matcore.op_norm(V) ** 2 / res.gap
    assert matcore.op_norm(symmetry.zeno_project(res, s.K2)) <= 1e-12


# --- isospectral resummation ---------------------------------------------------

@pytest.mark.parametrize("eps", [0.75, 0.1, 0.01, 1.3])
def test_two_level_resummation(eps):
    kr = kam.isospectral_blockdiag(TWO, SX, eps)
    assert close(kr.V_resummed, models.two_level_resummed(eps), 1e-12)


def test_two_level_three_quarters():
    kr = kam.isospectral_blockdiag(TWO, SX, 0.75)
    assert close(kr.V_resummed, SZ / 3, 1e-14)


def test_block_diagonal_v_is_untouched():
    res = spectral.resolve(np.diag([1.0, 1.0, 3.0]))
    V = np.array([[0.1, 0.2j, 0], [-0.2j, -0.3, 0], [0, 0, 0.5]], dtype=complex)
    kr = kam.isospectral_blockdiag(res, V, 0.2)
    assert close(kr.W, np.eye(3), 1e-14)
    assert close(kr.V_resummed, V, 1e-13)


def test_zero_epsilon():
    kr = kam.isospectral_blockdiag(TWO, SX, 0.0)
    assert close(kr.W, np.eye(2), 0) and kr.w_distance == 0.0


@given(seed=seeds, dim=small_dims, frac=st.floats(0.005, 0.1))
def test_resummation_invariants(seed, dim, frac):
    res, V = _instance(seed, dim)
    eps = frac * res.gap
    kr = kam.isospectral_blockdiag(res, V, eps)
    H = res.reconstruct()
    assert kr.residual_blockdiag <= 1e-9
    assert kr.residual_isospectral <= 1e-9 * max(1, matcore.op_norm(H))
    assert close(kr.W.conj().T @ kr.W, np.eye(dim), 1e-12)
    assert close(kr.V_resummed, kr.V_resummed.conj().T, 1e-10)
    assert kr.w_distance <= 2 * math.sqrt(res.d) * eps / res.gap * 1.5 + 1e-12


@given(seed=seeds, dim=small_dims)
def test_first_order_agreement(seed, dim):
    res, V = _instance(seed, dim)
    cs = []
    for eps in (0.04, 0.02, 0.01):
        e = eps * res.gap
        cs.append(matcore.op_norm(kam.isospectral_blockdiag(res, V, e, with_series=False).V_resummed
                                  - symmetry.zeno_project(res, V)) / e)
    assert max(cs) <= 1.5 * min(cs) + 1e-9


def test_level_crossing_for_large_eps():
    res = spectral.resolve(np.diag([0.0, 1.0, 2.0]))
    # the all-ones coupling dominates: its top eigenvector spreads evenly over the levels
    with pytest.raises(LevelCrossing):
        kam.isospectral_blockdiag(res, np.ones((3, 3)), 100.0)


def test_assign_clusters_rules():
    ov = np.array([[0.9, 0.1], [0.2, 0.8]])
    assert list(kam._assign_clusters(ov, np.array([1, 1]))) == [0, 1]
    with pytest.raises(LevelCrossing):
        kam._assign_clusters(np.array([[0.45, 0.55 - 0.2, 0.2], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]]), np.array([1, 1, 1]))
    with pytest.raises(LevelCrossing):
        kam._assign_clusters(np.array([[0.9, 0.1], [0.8, 0.2]]), np.array([1, 1]))


# --- oblique (superoperator) case --------------------------------------------------

def _liouvillian(H):
    n = H.shape[0]
    ident = np.eye(n)
    return -1j * (np.kron(ident, H) - np.kron(H.T, ident))


def _sorted_spectrum(A):
    z = np.linalg.eigvals(A)
    z = np.round(z.real, 9) + 1j * np.round(z.imag, 9)
    return z[np.lexsort((z.real, z.imag))]


def test_general_matches_hermitian_route_on_liouvillians():
    H = models.hermitian_with_spectrum([-1.0, 0.2, 1.5], seed=2)
    V = models.random_hermitian(3, 3)
    eps = 0.02
    L, LV = _liouvillian(H), _liouvillian(V)
    resL = spectral.riesz_resolve(L)
    kr = kam.isospectral_blockdiag_general(resL, LV, eps)
    assert kr.residual_blockdiag <= 1e-9
    assert kr.residual_isospectral <= 1e-9
    # the Hamiltonian route gives a Liouvillian with the same spectrum, block by block
    krH = kam.isospectral_blockdiag(spectral.resolve(H), V, eps)
    Lres = _liouvillian(H + eps * krH.V_resummed)
    gen = L + eps * kr.V_resummed
    for P in resL.projections:
        assert close(_sorted_spectrum(P @ gen @ P), _sorted_spectrum(P @ Lres @ P), 1e-8)


def test_general_block_diagonal_v_is_untouched():
    from kamstab import lindblad

    L = lindblad.dephasing(1.0, 1.0)
    resL = spectral.riesz_resolve(L.matrix)
    V = resL.function(np.array([0.3, -0.1, 0.7]))
    kr = kam.isospectral_blockdiag_general(resL, V, 0.1)
    assert close(kr.W, np.eye(4), 1e-12)
    assert close(kr.V_resummed, V, 1e-12)


def test_general_dephasing():
    from kamstab import lindblad

    L = lindblad.dephasing(1.0, 1.0)
    V = lindblad.commutator_super(SX, -0.5j)
    kr = kam.isospectral_blockdiag_general(spectral.riesz_resolve(L.matrix), V.matrix, 0.1)
    assert kr.residual_blockdiag <= 1e-9
    assert kr.w_distance <= 0.5
    kr2 = kam.isospectral_blockdiag_general(spectral.riesz_resolve(L.matrix), V.matrix, 0.05)
    assert 0.3 <= kr2.w_distance / kr.w_distance <= 0.7


# --- bounds ---------------------------------------------------------------------

def test_bounds_examples():
    b = kam.bounds(2, 2.0, 1.0, 0.1)
    assert b.zeno_bound(10.0) == pytest.approx(0.2 * math.sqrt(2), rel=1e-12)
    assert b.delta_hat_inf == pytest.approx(2 * math.sqrt(2) * (0.8**-0.25 - 1), rel=1e-12)
    assert b.delta_hat_inf == pytest.approx(0.1623, abs=1e-4)
    assert b.linear_bound == pytest.approx(7 * math.sqrt(2) * 0.05, rel=1e-12)
    assert b.validity
    assert kam.X0 == pytest.approx(0.88225, abs=1e-5)


def test_bounds_zero_eps():
    b = kam.bounds(3, 0.5, 1.0, 0.0)
    assert b.zeno_a == b.zeno_b == b.delta_hat_inf == b.linear_bound == 0.0


def test_bounds_invalid_domain():
    with pytest.raises(InvalidBound):
        kam.bounds(2, 1.0, 1.0, 0.25)
    assert not kam.bounds(2, 1.0, 1.0, 0.23).validity


@given(d=st.integers(1, 64), eta=st.floats(0.01, 10), x=st.floats(0.0, kam.X0, allow_subnormal=False))
def test_bounds_ordering(d, eta, x):
    eps = x * eta / 4
    b = kam.bounds(d, eta, 1.0, eps)
    assert b.validity
    assert b.linear_bound >= b.delta_hat_inf * (1 - 1e-12)
    assert b.delta_hat_inf >= b.first_order * (1 - 1e-12)
    assert b.zeno_b == pytest.approx(b.zeno_a * eps)
