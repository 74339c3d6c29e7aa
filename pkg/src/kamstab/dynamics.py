"""Time-domain checks: divergences of unitary groups, observable drift,
expectation values and Gibbs-state stability on a time grid."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import matcore
from .errors import UnnormalizedState
from .matcore import as_matrix, dagger

DEFAULT_POINTS = 2000
DEFAULT_T_FACTOR = 50.0  # t_max = 50 / eps


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray
    spacing: str = "linear"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("a time grid needs at least two points")
        if t[0] != 0.0 or not np.all(np.isfinite(t)) or not np.all(np.diff(t) > 0):
            raise ValueError("times must start at 0 and increase strictly")
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return len(self.times)

    @classmethod
    def linear(cls, t_max: float, points: int = DEFAULT_POINTS) -> "TimeGrid":
        return cls(np.linspace(0.0, float(t_max), int(points)), "linear")

    @classmethod
    def geometric(cls, t_max: float, points: int = DEFAULT_POINTS, t_min: float | None = None) -> "TimeGrid":
        """0 followed by ``points - 1`` log-spaced times ending at ``t_max``."""
        if t_min is None:
            t_min = t_max * 1e-4
        tail = np.geomspace(t_min, t_max, int(points) - 1)
        return cls(np.concatenate([[0.0], tail]), "geometric")

    @classmethod
    def for_epsilon(cls, eps: float, points: int = DEFAULT_POINTS) -> "TimeGrid":
        """Linear grid up to ``50 / eps``, past the ``1/eps`` secular scale."""
        return cls.linear(DEFAULT_T_FACTOR / eps if eps > 0 else DEFAULT_T_FACTOR, points)


@dataclass
class Trajectory:
    grid: TimeGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if len(self.values) != len(self.grid):
            raise ValueError("values and grid differ in length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trajectory has non-finite values")

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def max(self) -> float:
        return float(np.max(np.real(self.values)))

    def write_csv(self, path) -> None:
        """``t,value`` for real series, ``t,re,im`` for complex, plus a JSON sidecar."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        vals = self.values
        is_complex = np.iscomplexobj(vals) and np.any(np.imag(vals) != 0)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if is_complex:
                w.writerow(["t", "re", "im"])
                for t, v in zip(self.times, vals):
                    w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
            else:
                w.writerow(["t", "value"])
                for t, v in zip(self.times, np.real(vals)):
                    w.writerow([repr(float(t)), repr(float(v))])
        meta = {"spacing": self.grid.spacing, "points": len(self.grid), **self.meta}
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=_jsonable))


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialise {type(obj)}")


def read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    t = np.array([float(r[0]) for r in body])
    if header == ["t", "re", "im"]:
        return t, np.array([complex(float(r[1]), float(r[2])) for r in body])
    return t, np.array([float(r[1]) for r in body])


class Propagator:
    """``exp(i t G)`` for Hermitian ``G`` via one eigendecomposition."""

    def __init__(self, G):
        self.G = as_matrix(G)
        eig = matcore.herm_eig(self.G)
        self.energies = eig.eigenvalues
        self.basis = eig.eigenvectors

    def at(self, times, sign: float = 1.0) -> np.ndarray:
        """Stack of ``exp(sign * i t G)`` for each ``t`` in ``times``."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        phases = np.exp(1j * sign * np.outer(times, self.energies))
        U = self.basis
        return (U[None, :, :] * phases[:, None, :]) @ dagger(U)[None, :, :]


def _chunks(n: int, size: int = 500):
    for start in range(0, n, size):
        yield slice(start, min(start + size, n))


def divergence_traj(H, V, eps: float, V_approx, grid: TimeGrid, *, meta: dict | None = None) -> Trajectory:
    """``|| exp(it(H + eps V)) - exp(it(H + eps V_approx)) ||`` on the grid."""
    H, V, V_approx = as_matrix(H), as_matrix(V), as_matrix(V_approx)
    exact = Propagator(H + eps * V)
    approx = Propagator(H + eps * V_approx)
    values = np.empty(len(grid))
    for sl in _chunks(len(grid)):
        t = grid.times[sl]
        values[sl] = matcore.op_norm(exact.at(t) - approx.at(t))
    values[0] = 0.0 if grid.times[0] == 0 else values[0]
    return Trajectory(grid, values, {"quantity": "divergence", "epsilon": eps, **(meta or {})})


def heisenberg_evolve(prop: Propagator, M: np.ndarray, times) -> np.ndarray:
    """``exp(itG) M exp(-itG)`` for each time."""
    U = prop.at(times)
    return U @ M @ dagger(U)


def observable_drift(H, V, eps: float, M, grid: TimeGrid, tol: float = 1e-10,
                     *, meta: dict | None = None) -> Trajectory:
    """``|| M_t^eps - M ||`` for conserved ``M``.

    If ``[M, H] != 0`` the reference is the free evolution ``M_t`` instead of
    ``M`` and ``meta['reference']`` says so.
    """
    H, V, M = as_matrix(H), as_matrix(V), as_matrix(M)
    conserved = matcore.op_norm(H @ M - M @ H) <= tol * max(1.0, matcore.op_norm(M) * matcore.op_norm(H))
    pert = Propagator(H + eps * V)
    free = None if conserved else Propagator(H)
    values = np.empty(len(grid))
    for sl in _chunks(len(grid)):
        t = grid.times[sl]
        ref = M if conserved else heisenberg_evolve(free, M, t)
        values[sl] = matcore.op_norm(heisenberg_evolve(pert, M, t) - ref)
    info = {"quantity": "observable_drift", "epsilon": eps, "reference": "M" if conserved else "M_t"}
    return Trajectory(grid, values, {**info, **(meta or {})})


def expectation_traj(G, M, psi0, grid: TimeGrid, *, meta: dict | None = None) -> Trajectory:
    """``<psi0| exp(itG) M exp(-itG) |psi0>`` (real part for Hermitian ``M``)."""
    G, M = as_matrix(G), as_matrix(M)
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-12:
        raise UnnormalizedState(f"||psi0|| = {np.linalg.norm(psi0):.15g}")
    prop = Propagator(G)
    # states exp(-itG) psi0 in the eigenbasis of G
    coeffs = dagger(prop.basis) @ psi0
    phases = np.exp(-1j * np.outer(grid.times, prop.energies))
    states = (phases * coeffs[None, :]) @ prop.basis.T
    values = np.einsum("ti,ij,tj->t", np.conj(states), M, states)
    hermitian = matcore.hermiticity_defect(M) <= 1e-12 * max(1.0, float(matcore.fro(M)))
    if hermitian:
        values = values.real
    return Trajectory(grid, values, {"quantity": "expectation", **(meta or {})})


def deviation(traj: Trajectory) -> Trajectory:
    """The same series shifted so that it starts from 0."""
    return Trajectory(traj.grid, traj.values - traj.values[0], {**traj.meta, "shifted": True})


def gibbs_drift(H, V, eps: float, beta: float, grid: TimeGrid, *, meta: dict | None = None) -> Trajectory:
    """``|| exp(-it(H+eps V)) exp(-beta H) exp(it(H+eps V)) - exp(-beta H) ||``."""
    H, V = as_matrix(H), as_matrix(V)
    rho = matcore.matfun_herm(H, lambda x: np.exp(-beta * x))
    prop = Propagator(H + eps * V)
    values = np.empty(len(grid))
    for sl in _chunks(len(grid)):
        U = prop.at(grid.times[sl], sign=-1.0)
        values[sl] = matcore.op_norm(U @ rho @ dagger(U) - rho)
    return Trajectory(grid, values, {"quantity": "gibbs_drift", "epsilon": eps, "beta": beta, **(meta or {})})


def unitarity_defect(prop: Propagator, times) -> float:
    U = prop.at(times)
    n = U.shape[-1]
    return float(np.max(np.abs(dagger(U) @ U - np.eye(n))))


def sup_estimate(traj: Trajectory) -> float:
    """Grid maximum: a lower estimate of the supremum over all times."""
    return float(np.max(np.abs(traj.values)))


def zeno_bound_values(d: int, eta: float, eps: float, normV: float, times) -> np.ndarray:
    a = 2.0 * math.sqrt(d) * eps * normV / eta
    return a * (1.0 + eps * normV * np.asarray(times, dtype=float))
