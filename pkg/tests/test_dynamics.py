from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kamstab import dynamics, kam, matcore, models, spectral
from kamstab.errors import UnnormalizedState
from kamstab.models import SX, SZ

from conftest import close, seeds

ZERO2 = np.zeros((2, 2), dtype=complex)


def test_time_grid_validation():
    with pytest.raises(ValueError):
        dynamics.TimeGrid(np.array([0.0]))
    with pytest.raises(ValueError):
        dynamics.TimeGrid(np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        dynamics.TimeGrid(np.array([0.0, 1.0, 1.0]))
    g = dynamics.TimeGrid.for_epsilon(0.1)
    assert len(g) == 2000 and g.times[-1] == pytest.approx(500.0)
    geo = dynamics.TimeGrid.geometric(100.0, 50)
    assert geo.times[0] == 0 and geo.times[-1] == pytest.approx(100.0) and len(geo) == 50


def test_trajectory_checks_values():
    g = dynamics.TimeGrid.linear(1.0, 3)
    with pytest.raises(ValueError):
        dynamics.Trajectory(g, [0.0, 1.0])
    with pytest.raises(ValueError):
        dynamics.Trajectory(g, [0.0, np.nan, 1.0])


def test_divergence_two_level_closed_form():
    eps = 0.2
    g = dynamics.TimeGrid.linear(100.0, 500)
    kr = kam.isospectral_blockdiag(spectral.resolve(SZ), SX, eps)
    tr = dynamics.divergence_traj(SZ, SX, eps, kr.V_resummed, g)
    assert tr.values[0] == 0.0
    assert close(tr.values, models.two_level_divergence(eps, g.times), 1e-12)
    assert tr.max() <= eps


def test_zeno_saturation():
    eps, t = models.zeno_saturation_sequence(1)
    tr = dynamics.divergence_traj(SZ, SX, eps, ZERO2, dynamics.TimeGrid(np.array([0.0, t])))
    assert tr.values[-1] == pytest.approx(2.0, abs=1e-12)


def test_divergence_of_identical_generators_vanishes():
    H, V = models.random_hermitian(4, 1), models.random_hermitian(4, 2)
    tr = dynamics.divergence_traj(H, V, 0.3, V, dynamics.TimeGrid.linear(50, 100))
    assert tr.max() <= 1e-12


@given(seed=seeds)
def test_propagator_unitary_and_matches_expm(seed):
    G = models.random_hermitian(6, seed, normalize=False)
    prop = dynamics.Propagator(G)
    t = np.linspace(0, 30, 7)
    assert dynamics.unitarity_defect(prop, t) <= 1e-10
    U = prop.at(t)
    for k, s in enumerate(t):
        assert close(U[k], matcore.expm(1j * G, s), 1e-10)


def test_fragile_expectation():
    ex = models.fragile_example(0.0, 1.0, -1.0)
    eps = 0.1
    g = dynamics.TimeGrid.linear(math.pi / (2 * eps), 400)
    dev = dynamics.deviation(dynamics.expectation_traj(ex.H + eps * ex.V, ex.M, ex.psi0, g))
    assert close(dev.values, -ex.delta * np.sin(eps * g.times) ** 2, 1e-12)
    assert dev.values[-1] == pytest.approx(-ex.delta, abs=1e-12)


def test_fragile_observable_drift_reaches_delta():
    ex = models.fragile_example(0.0, 1.0, -1.0)
    eps = 0.05
    g = dynamics.TimeGrid(np.array([0.0, math.pi / (2 * eps)]))
    tr = dynamics.observable_drift(ex.H, ex.V, eps, ex.M, g)
    assert tr.values[-1] == pytest.approx(ex.delta, abs=1e-12)
    assert tr.meta["reference"] == "M"


def test_expectation_requires_normalised_state():
    with pytest.raises(UnnormalizedState):
        dynamics.expectation_traj(SZ, SZ, np.array([1.0, 1.0]), dynamics.TimeGrid.linear(1, 3))


def test_expectation_identity_is_constant():
    psi = models.random_state(4, 0)
    tr = dynamics.expectation_traj(models.random_hermitian(4, 1), np.eye(4), psi, dynamics.TimeGrid.linear(10, 20))
    assert close(tr.values, 1.0, 1e-13)


def test_observable_drift_zero_eps_and_nonconserved_flag():
    H, V = models.random_hermitian(4, 3), models.random_hermitian(4, 4)
    res = spectral.resolve(H)
    M = res.function(np.arange(res.d, dtype=float))
    g = dynamics.TimeGrid.linear(20, 50)
    assert dynamics.observable_drift(H, V, 0.0, M, g).max() <= 1e-12
    tr = dynamics.observable_drift(H, V, 0.0, V, g)
    assert tr.meta["reference"] == "M_t" and tr.max() <= 1e-12


@given(seed=seeds, frac=st.floats(0.01, 0.08))
def test_drift_bound_chain(seed, frac):
    H, V = models.random_hermitian(6, seed), models.random_hermitian(6, seed + 1)
    res = spectral.resolve(H)
    eps = frac * res.gap
    M = res.function(models.rng_for(seed).standard_normal(res.d))
    g = dynamics.TimeGrid.linear(5 / eps, 300)
    kr = kam.isospectral_blockdiag(res, V, eps)
    drift = dynamics.observable_drift(H, V, eps, M, g)
    zeno = dynamics.divergence_traj(H, V, eps, kr.V_Z, g)
    eternal = dynamics.divergence_traj(H, V, eps, kr.V_resummed, g)
    b = kam.bounds_for(res, V, eps)
    nM = matcore.op_norm(M)
    tol = 1e-12
    assert np.all(drift.values <= 2 * nM * zeno.values + tol)
    assert np.all(zeno.values <= b.zeno_bound(g.times) + tol)
    assert np.all(drift.values <= 2 * nM * eternal.values + tol)
    assert eternal.max() <= b.linear_bound


def test_gibbs_drift_trivial_cases():
    H, V = models.random_hermitian(4, 5), models.random_hermitian(4, 6)
    g = dynamics.TimeGrid.linear(10, 30)
    assert dynamics.gibbs_drift(H, V, 0.1, 0.0, g).max() <= 1e-12
    assert dynamics.gibbs_drift(H, V, 0.0, 1.0, g).max() <= 1e-12
    assert dynamics.gibbs_drift(H, V, 0.1, 1.0, g).values[0] == pytest.approx(0.0, abs=1e-14)


def test_energy_moments_scale_linearly():
    H, V = models.random_hermitian(6, 10), models.random_hermitian(6, 11)
    psi = models.random_state(6, 12)
    H2 = H @ H
    sups = []
    for eps in (0.02, 0.01):
        g = dynamics.TimeGrid.for_epsilon(eps, 800)
        e1 = dynamics.deviation(dynamics.expectation_traj(H + eps * V, H, psi, g))
        e2 = dynamics.deviation(dynamics.expectation_traj(H + eps * V, H2, psi, g))
        var = e2.values - (e1.values + e1.values[0]) ** 2 + e1.values[0] ** 2
        sups.append((np.max(np.abs(e1.values)), np.max(np.abs(var))))
    for k in range(2):
        assert 0.3 <= sups[1][k] / sups[0][k] <= 0.7


def test_csv_round_trip(tmp_path):
    g = dynamics.TimeGrid.linear(1.0, 5)
    tr = dynamics.Trajectory(g, np.array([0.1, 1 / 3, 2.5e-17, 7.0, -1.0]), {"epsilon": 0.1})
    tr.write_csv(tmp_path / "a.csv")
    t, v = dynamics.read_csv(tmp_path / "a.csv")
    assert np.array_equal(t, g.times) and np.array_equal(v, tr.values)
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "t,value"
    assert (tmp_path / "a.json").exists()
    ctr = dynamics.Trajectory(g, np.array([0, 1j, 1 + 1j, 2, 3], dtype=complex))
    ctr.write_csv(tmp_path / "c.csv")
    t, v = dynamics.read_csv(tmp_path / "c.csv")
    assert np.array_equal(v, ctr.values)
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "t,re,im"


def test_zeno_bound_values_match_report():
    b = kam.bounds(2, 2.0, 1.0, 0.1)
    t = np.array([0.0, 10.0])
    assert close(dynamics.zeno_bound_values(2, 2.0, 0.1, 1.0, t), b.zeno_bound(t), 1e-15)
