"""Block-diagonal/off-diagonal splitting and the three-way observable split.

Relative to a resolution ``H = sum_k e_k P_k`` every observable splits into

* a nonconserved part ``M - sum_k P_k M P_k`` (off the eigenspace blocks),
* a robust part ``sum_k tr(P_k M P_k)/d_k P_k`` (a function of ``H``),
* a fragile part, the traceless remainder inside each block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import DimensionMismatch, NotHermitian
from .matcore import as_matrix, dagger
from .spectral import SpectralResolution, block_averages

CLASSIFY_TOL = 1e-8
LABELS = ("Robust", "Fragile", "NonConserved", "Mixed")


def _check_dim(res: SpectralResolution, V: np.ndarray) -> None:
    if V.shape[-1] != res.dim:
        raise DimensionMismatch(f"operator has dim {V.shape[-1]}, resolution has dim {res.dim}")


def zeno_project(res: SpectralResolution, V) -> np.ndarray:
    """Block-diagonal part ``sum_k P_k V P_k``."""
    V = as_matrix(V)
    _check_dim(res, V)
    P = res.projections
    return np.einsum("kij,jl,klm->im", P, V, P)


def offdiag(res: SpectralResolution, V) -> np.ndarray:
    V = as_matrix(V)
    return V - zeno_project(res, V)


def _require_hermitian(M: np.ndarray, name: str = "observable") -> None:
    defect = matcore.hermiticity_defect(M)
    if defect > matcore.DEFAULT_TOL * max(1.0, float(matcore.fro(M))):
        raise NotHermitian(f"{name} is not Hermitian (defect {defect:.3e})")


@dataclass(frozen=True)
class ObservableDecomposition:
    noncons: np.ndarray
    robust: np.ndarray
    fragile: np.ndarray
    residual: float

    def parts(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.noncons, self.robust, self.fragile

    def norms(self) -> dict[str, float]:
        return {
            "noncons": float(matcore.op_norm(self.noncons)),
            "robust": float(matcore.op_norm(self.robust)),
            "fragile": float(matcore.op_norm(self.fragile)),
        }


def decompose_observable(res: SpectralResolution, M) -> ObservableDecomposition:
    M = as_matrix(M)
    _check_dim(res, M)
    _require_hermitian(M)
    conserved = zeno_project(res, M)
    noncons = M - conserved
    robust = res.function(block_averages(res, M).real)
    fragile = conserved - robust
    residual = float(np.max(np.abs(noncons + robust + fragile - M)))
    return ObservableDecomposition(noncons, robust, fragile, residual)


@dataclass(frozen=True)
class RobustnessClass:
    label: str
    noncons: float
    robust: float
    fragile: float


def classify(res: SpectralResolution, M, tol: float = CLASSIFY_TOL) -> RobustnessClass:
    """Label ``M`` by which parts exceed ``tol * max(1, ||M||)`` in operator norm.

    A single present part gives its own label; two or more give ``Mixed``.
    ``M = 0`` counts as Robust (the zero polynomial).
    """
    dec = decompose_observable(res, M)
    norms = dec.norms()
    thresh = tol * max(1.0, float(matcore.op_norm(as_matrix(M))))
    present = [name for name in ("noncons", "robust", "fragile") if norms[name] > thresh]
    if len(present) >= 2:
        label = "Mixed"
    elif present == ["noncons"]:
        label = "NonConserved"
    elif present == ["fragile"]:
        label = "Fragile"
    else:
        label = "Robust"
    return RobustnessClass(label, norms["noncons"], norms["robust"], norms["fragile"])


def commutator(A, B) -> np.ndarray:
    return A @ B - B @ A


def random_commutant(res: SpectralResolution, rng: np.random.Generator) -> np.ndarray:
    """A random Hermitian operator commuting with the resolved operator."""
    n = res.dim
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    X = 0.5 * (X + dagger(X))
    return zeno_project(res, X)
