"""Homological equation, second-order series and isospectral resummation.

Given ``H = sum_k h_k P_k`` and a perturbation ``V`` we look for a block-diagonal
``V_H(eps)`` and a transformation ``W`` with

    H + eps V_H(eps) = W^-1 (H + eps V) W,       W = 1 + O(eps).

``series_order2`` gives the first terms of the expansion
``V_H = V_0 + eps V_1 + ...``, ``W = exp(i (eps K_1 + eps^2 K_2 + ...))``.
``isospectral_blockdiag`` builds the exact object for a given ``eps`` by the
direct rotation between the unperturbed and perturbed spectral subspaces:
``Q = sum_k P~_k P_k`` and ``W = Q (Q^dagger Q)^{-1/2}``, which is unitary and
carries ``range(P_k)`` onto ``range(P~_k)``.  The oblique (Lindbladian)
version uses ``W = Q`` itself, a similarity rather than a unitary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import DegenerateTrivial, InvalidBound, LevelCrossing, SingularOverlap
from .matcore import as_matrix, dagger
from .spectral import SpectralResolution, reduced_resolvent
from .symmetry import offdiag, zeno_project

OVERLAP_THRESHOLD = 0.5
# Upper end of the range where the explicit eternal bound stays below the trivial value 2.
X0 = (13.0 + 12.0 * math.sqrt(2.0)) / (17.0 + 12.0 * math.sqrt(2.0))


def solve_homological(res: SpectralResolution, V) -> np.ndarray:
    """Gauge-fixed solution ``K`` of ``i[H, K] = -{V}`` with ``<K> = 0``.

    ``K = i sum_l S_l V P_l``; for Hermitian ``V`` the result is Hermitian.
    With a single eigenvalue everything commutes, ``K = 0`` and a
    ``DegenerateTrivial`` warning is issued.
    """
    V = as_matrix(V)
    if res.d == 1:
        warnings.warn("single eigenvalue: homological equation is trivial", DegenerateTrivial, stacklevel=2)
        return np.zeros_like(V)
    K = np.zeros_like(V)
    for ell in range(res.d):
        K += reduced_resolvent(res, ell) @ V @ res.projections[ell]
    return 1j * K


def homological_residual(res: SpectralResolution, K, V) -> float:
    """``|| i[H, K] + {V} ||`` in operator norm."""
    H = res.reconstruct()
    return float(matcore.op_norm(1j * (H @ K - K @ H) + offdiag(res, V)))


def first_order_generator_bound(res: SpectralResolution, V) -> float:
    """``sqrt(d) ||V|| / eta``, the a-priori bound on ``||K_1||``."""
    return math.sqrt(res.d) * float(matcore.op_norm(as_matrix(V))) / res.gap


@dataclass(frozen=True)
class SeriesTerms:
    V0: np.ndarray
    V1: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    K2_source: np.ndarray  # i[V - {V}/2, K_1], whose off-diagonal part drives K_2


def series_order2(res: SpectralResolution, V) -> SeriesTerms:
    V = as_matrix(V)
    V0 = zeno_project(res, V)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateTrivial)
        K1 = solve_homological(res, V)
        off = V - V0
        source = 1j * ((V - 0.5 * off) @ K1 - K1 @ (V - 0.5 * off))
        K2 = solve_homological(res, source)
    V1 = np.zeros_like(V)
    for ell in range(res.d):
        P = res.projections[ell]
        V1 -= P @ V @ reduced_resolvent(res, ell) @ V @ P
    return SeriesTerms(V0, V1, K1, K2, source)


@dataclass(frozen=True)
class KamResult:
    V_Z: np.ndarray
    K_1: np.ndarray | None
    V_1: np.ndarray | None
    K_2: np.ndarray | None
    W: np.ndarray
    V_resummed: np.ndarray
    epsilon: float
    residual_blockdiag: float
    residual_isospectral: float
    w_distance: float
    oblique: bool = False

    @property
    def W_inv(self) -> np.ndarray:
        return dagger(self.W) if not self.oblique else np.linalg.inv(self.W)


def _assign_clusters(overlaps: np.ndarray, multiplicities: np.ndarray) -> np.ndarray:
    """Greedy matching of perturbed eigenvectors (rows) to clusters (columns).

    Pairs are taken in descending overlap; a cluster accepts at most ``d_k``
    vectors.  Raises ``LevelCrossing`` if a vector's best overlap is below
    the threshold or it does not land in its best cluster.
    """
    n, d = overlaps.shape
    best = overlaps.max(axis=1)
    if np.any(best < OVERLAP_THRESHOLD):
        i = int(np.argmin(best))
        raise LevelCrossing(f"perturbed eigenvector {i} has max cluster overlap {best[i]:.3f} < {OVERLAP_THRESHOLD}")
    assign = np.full(n, -1)
    room = multiplicities.astype(int).copy()
    for flat in np.argsort(-overlaps, axis=None, kind="stable"):
        i, k = divmod(int(flat), d)
        if assign[i] < 0 and room[k] > 0:
            assign[i] = k
            room[k] -= 1
    if np.any(assign < 0) or np.any(room != 0):
        raise LevelCrossing("cluster sizes cannot be matched")
    if np.any(assign != overlaps.argmax(axis=1)):
        i = int(np.flatnonzero(assign != overlaps.argmax(axis=1))[0])
        raise LevelCrossing(f"perturbed eigenvector {i} forced out of its dominant cluster")
    return assign


def _spectrum_distance(A: np.ndarray, B: np.ndarray, hermitian: bool) -> float:
    if hermitian:
        a = matcore.herm_eig(A, check=False).eigenvalues
        b = matcore.herm_eig(B, check=False).eigenvalues
        return float(np.max(np.abs(a - b)))
    a = matcore.gen_eig(A).eigenvalues
    b = matcore.gen_eig(B).eigenvalues
    # greedy nearest matching; both lists are small
    remaining = list(b)
    worst = 0.0
    for x in a:
        j = int(np.argmin([abs(x - y) for y in remaining]))
        worst = max(worst, abs(x - remaining.pop(j)))
    return worst


def isospectral_blockdiag(res: SpectralResolution, V, eps: float, *, with_series: bool = True) -> KamResult:
    """Unitary block-diagonalisation of ``H + eps V`` relative to ``res`` (Hermitian ``H``)."""
    if res.oblique:
        raise ValueError("use isospectral_blockdiag_general for oblique resolutions")
    V = as_matrix(V)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    H = res.reconstruct()
    n = res.dim
    series = series_order2(res, V) if with_series else None
    V_Z = series.V0 if series else zeno_project(res, V)
    if eps == 0:
        W = np.eye(n, dtype=np.complex128)
        return KamResult(V_Z, *(_series_fields(series)), W, V_Z.copy(), 0.0,
                         float(matcore.op_norm(offdiag(res, V_Z))), 0.0, 0.0)

    Ht = H + eps * V
    eig = matcore.herm_eig(Ht)
    vecs = eig.eigenvectors
    overlaps = np.real(np.einsum("ia,kij,ja->ak", np.conj(vecs), res.projections, vecs))
    assign = _assign_clusters(overlaps, res.multiplicities)
    Q = np.zeros((n, n), dtype=np.complex128)
    for k in range(res.d):
        cols = vecs[:, assign == k]
        Q += cols @ dagger(cols) @ res.projections[k]
    gram = dagger(Q) @ Q
    try:
        W = Q @ matcore.inv_sqrt_psd(gram, tol=1e-12)
    except matcore.NotPositiveDefinite as exc:
        raise SingularOverlap(str(exc)) from exc
    transformed = dagger(W) @ Ht @ W
    V_res = (transformed - H) / eps
    return KamResult(
        V_Z, *(_series_fields(series)), W, V_res, float(eps),
        float(matcore.op_norm(offdiag(res, V_res))),
        _spectrum_distance(H + eps * V_res, Ht, hermitian=True),
        float(matcore.op_norm(W - np.eye(n))),
    )


def _series_fields(series: SeriesTerms | None):
    if series is None:
        return None, None, None
    return series.K1, series.V1, series.K2


def isospectral_blockdiag_general(resL: SpectralResolution, V, eps: float) -> KamResult:
    """Similarity block-diagonalisation of ``L + eps V`` relative to oblique projections."""
    V = as_matrix(V)
    L = resL.source if resL.source is not None else resL.reconstruct()
    n = resL.dim
    V_Z = zeno_project(resL, V)
    if eps == 0:
        W = np.eye(n, dtype=np.complex128)
        return KamResult(V_Z, None, None, None, W, V_Z.copy(), 0.0,
                         float(matcore.op_norm(offdiag(resL, V_Z))), 0.0, 0.0, oblique=True)
    Lt = L + eps * V
    eig = matcore.gen_eig(Lt)
    S = eig.eigenvectors
    Sinv = np.linalg.inv(S)
    weights = np.array([np.linalg.norm(P @ S, axis=0) ** 2 for P in resL.projections]).T
    overlaps = weights / weights.sum(axis=1, keepdims=True)
    assign = _assign_clusters(overlaps, resL.multiplicities)
    Q = np.zeros((n, n), dtype=np.complex128)
    for k in range(resL.d):
        sel = assign == k
        Q += S[:, sel] @ Sinv[sel, :] @ resL.projections[k]
    cond = matcore.condition_number(Q)
    if not math.isfinite(cond) or cond > matcore.COND_CAP:
        raise SingularOverlap(f"overlap map Q is singular (condition {cond:.3e})")
    Qinv = np.linalg.inv(Q)
    V_res = (Qinv @ Lt @ Q - L) / eps
    return KamResult(
        V_Z, None, None, None, Q, V_res, float(eps),
        float(matcore.op_norm(offdiag(resL, V_res))),
        _spectrum_distance(L + eps * V_res, Lt, hermitian=False),
        float(matcore.op_norm(Q - np.eye(n))),
        oblique=True,
    )


@dataclass(frozen=True)
class BoundReport:
    d: int
    eta: float
    epsilon: float
    normV: float
    zeno_a: float
    zeno_b: float
    delta_hat_inf: float
    linear_bound: float
    validity: bool
    x0: float = X0

    def zeno_bound(self, t):
        """``a + b t``, the Zeno divergence bound at time(s) ``t``."""
        return self.zeno_a + self.zeno_b * np.asarray(t, dtype=float)

    @property
    def first_order(self) -> float:
        return 2.0 * math.sqrt(self.d) * self.epsilon * self.normV / self.eta


def bounds(d: int, eta: float, normV: float, eps: float) -> BoundReport:
    """Closed-form divergence bounds for a perturbation of strength ``eps * normV``.

    The eternal bounds are stated for ``||V|| = 1``; for general ``V`` the
    effective strength ``eps * ||V||`` is used throughout.
    """
    if d < 1 or not eta > 0 or eps < 0 or normV < 0:
        raise ValueError("need d >= 1, eta > 0, eps >= 0, normV >= 0")
    strength = eps * normV
    x = 4.0 * strength / eta
    if x >= 1.0:
        raise InvalidBound(f"4 eps ||V|| / eta = {x:.4f} >= 1: explicit eternal bound undefined")
    a = 2.0 * math.sqrt(d) * strength / eta
    if x < 1e-8:
        growth = 0.25 * x * (1.0 + 0.625 * x)  # series of (1-x)^(-1/4) - 1
    else:
        growth = math.expm1(-0.25 * math.log1p(-x))  # same quantity without cancellation
    delta_hat = 2.0 * math.sqrt(d) * growth
    linear = 7.0 * math.sqrt(d) * strength / eta
    return BoundReport(d, eta, eps, normV, a, a * strength, delta_hat, linear, x <= X0)


def bounds_for(res: SpectralResolution, V, eps: float) -> BoundReport:
    return bounds(res.d, res.gap, float(matcore.op_norm(as_matrix(V))), eps)
