"""Superoperators in the column-stacking convention and the symmetry monotone.

``vec`` stacks columns, so ``vec(A X B) = (B^T kron A) vec(X)``.  A
:class:`Superoperator` stores the ``D^2 x D^2`` matrix of a linear map on
``D x D`` matrices under that convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore
from .dynamics import TimeGrid, Trajectory
from .errors import NotPositive, NotState, PositivityLost
from .kam import KamResult
from .matcore import as_matrix, dagger

POSITIVITY_TOL = 1e-12
STATE_TOL = 1e-10
MAX_HILBERT_DIM = 8


def vectorize(X) -> np.ndarray:
    return np.asarray(X, dtype=np.complex128).reshape(-1, order="F")


def devectorize(v, D: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if D is None:
        D = int(round(np.sqrt(v.size)))
    if D * D != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorised {D}x{D} matrix")
    return v.reshape((D, D), order="F")


@dataclass(frozen=True)
class Superoperator:
    dim: int  # Hilbert-space dimension D
    matrix: np.ndarray  # D^2 x D^2

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape != (self.dim**2, self.dim**2):
            raise ValueError(f"expected {self.dim**2}x{self.dim**2} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    def __call__(self, X) -> np.ndarray:
        return devectorize(self.matrix @ vectorize(X), self.dim)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.dim, self.matrix + other.matrix)

    def __mul__(self, c) -> "Superoperator":
        return Superoperator(self.dim, c * self.matrix)

    __rmul__ = __mul__

    def trace_defect(self) -> float:
        """``|| vec(I)^dagger L ||``: zero for trace-preserving generators."""
        return float(np.linalg.norm(vectorize(np.eye(self.dim)).conj() @ self.matrix))

    @classmethod
    def from_map(cls, D: int, fn) -> "Superoperator":
        cols = []
        for j in range(D * D):
            e = np.zeros(D * D, dtype=np.complex128)
            e[j] = 1.0
            cols.append(vectorize(fn(devectorize(e, D))))
        return cls(D, np.array(cols).T)


def left_right(A, B) -> Superoperator:
    """Superoperator of ``X -> A X B``."""
    A, B = as_matrix(A), as_matrix(B)
    return Superoperator(A.shape[0], np.kron(B.T, A))


def identity_super(D: int) -> Superoperator:
    return Superoperator(D, np.eye(D * D, dtype=np.complex128))


def commutator_super(A, coefficient: complex = 1.0) -> Superoperator:
    """``X -> c (A X - X A)``."""
    A = as_matrix(A)
    ident = np.eye(A.shape[0], dtype=np.complex128)
    return Superoperator(A.shape[0], coefficient * (np.kron(ident, A) - np.kron(A.T, ident)))


def lindbladian(H, jumps=()) -> Superoperator:
    """GKLS generator ``-i[H, .] + sum_j (L_j . L_j^dagger - {L_j^dagger L_j, .}/2)``."""
    H = as_matrix(H)
    D = H.shape[0]
    if D > MAX_HILBERT_DIM:
        raise ValueError(f"Hilbert dimension {D} exceeds {MAX_HILBERT_DIM}")
    ident = np.eye(D, dtype=np.complex128)
    out = commutator_super(H, -1j).matrix
    for Lj in jumps:
        Lj = as_matrix(Lj)
        LdL = dagger(Lj) @ Lj
        out = out + np.kron(Lj.conj(), Lj) - 0.5 * (np.kron(ident, LdL) + np.kron(LdL.T, ident))
    return Superoperator(D, out)


def dephasing(omega: float, kappa: float) -> Superoperator:
    """``-(i omega/2)[sigma_z, .] - (kappa/2)(. - sigma_z . sigma_z)`` on a qubit.

    Coherences decay as ``rho_01(t) = exp(-(kappa + i omega) t) rho_01(0)``.
    """
    sz = np.diag([1.0, -1.0]).astype(np.complex128)
    return commutator_super(sz, -0.5j * omega) + (-0.5 * kappa) * (identity_super(2) + (-1.0) * left_right(sz, sz))


def bloch_state(r) -> np.ndarray:
    """Qubit density matrix ``(I + r . sigma)/2``."""
    rx, ry, rz = r
    return 0.5 * np.array([[1 + rz, rx - 1j * ry], [rx + 1j * ry, 1 - rz]], dtype=np.complex128)


# ---------------------------------------------------------------------------
# Monotone
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonotoneSpec:
    M: Superoperator
    lam: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be finite and >= 0")


def _check_state(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if matcore.hermiticity_defect(rho) > STATE_TOL:
        raise NotState("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > STATE_TOL:
        raise NotState(f"trace {tr.real:.12g} != 1")
    eig = matcore.herm_eig(rho, check=False)
    return eig.eigenvalues, eig.eigenvectors


def monotone(spec: MonotoneSpec, rho) -> float:
    """``tr[ M(rho)^dagger (L_rho + lam R_rho)^-1 M(rho) ]``.

    Evaluated in the eigenbasis of ``rho`` where the inverse is entrywise
    division by ``p_i + lam p_j``.
    """
    rho = as_matrix(rho)
    p, U = _check_state(rho)
    if p[0] <= POSITIVITY_TOL:
        raise NotPositive(f"minimum eigenvalue {p[0]:.3e} <= {POSITIVITY_TOL}")
    X = dagger(U) @ spec.M(rho) @ U
    denom = p[:, None] + spec.lam * p[None, :]
    return float(np.sum(np.abs(X) ** 2 / denom))


def evolve_states(generator: np.ndarray, rho0, times) -> np.ndarray:
    """``devec(exp(t G) vec(rho0))`` for each time; stack of shape ``(T, D, D)``."""
    v0 = vectorize(rho0)
    D = int(round(np.sqrt(v0.size)))
    out = np.empty((len(times), D, D), dtype=np.complex128)
    for i, t in enumerate(times):
        out[i] = devectorize(matcore.expm(generator, float(t)) @ v0, D)
    return out


def _monotone_series(spec: MonotoneSpec, states: np.ndarray, times) -> np.ndarray:
    vals = np.empty(len(states))
    for i, rho in enumerate(states):
        rho = 0.5 * (rho + dagger(rho))
        p = matcore.herm_eig(rho, check=False).eigenvalues
        if p[0] <= POSITIVITY_TOL:
            raise PositivityLost(float(times[i]), float(p[0]))
        vals[i] = monotone(spec, rho)
    return vals


def monotone_traj(L: Superoperator, V: Superoperator, eps: float, spec: MonotoneSpec, rho0,
                  grid: TimeGrid) -> tuple[Trajectory, Trajectory]:
    """``f_M`` along the unperturbed and the perturbed evolution of ``rho0``."""
    rho0 = as_matrix(rho0)
    t = grid.times
    free = _monotone_series(spec, evolve_states(L.matrix, rho0, t), t)
    pert = _monotone_series(spec, evolve_states(L.matrix + eps * V.matrix, rho0, t), t)
    meta = {"quantity": "monotone", "lambda": spec.lam}
    return (
        Trajectory(grid, free, {**meta, "epsilon": 0.0}),
        Trajectory(grid, pert, {**meta, "epsilon": eps}),
    )


def transported_symmetry(kamres: KamResult, M: Superoperator) -> Superoperator:
    """``W M W^-1``: the symmetry carried over to the perturbed generator."""
    W = kamres.W
    return Superoperator(M.dim, W @ M.matrix @ np.linalg.inv(W))


def robust_symmetry(resL, values) -> Superoperator:
    """``sum_k m_k P_k`` built from the spectral projections of a generator."""
    D = int(round(np.sqrt(resL.dim)))
    return Superoperator(D, resL.function(values))


def monotone_violation(traj: Trajectory) -> float:
    """``max_t f(rho_t) - f(rho_0)``: how far the series climbs above its start."""
    return float(np.max(traj.values - traj.values[0]))


def max_increase(traj: Trajectory) -> float:
    """Largest rise ``f(t2) - f(t1)`` over ``t1 <= t2`` (0 for a nonincreasing series)."""
    v = traj.values
    return float(np.max(v - np.minimum.accumulate(v)))
