"""Spectral resolutions, reduced resolvents and polynomial representation.

A :class:`SpectralResolution` is the finite decomposition ``A = sum_k e_k P_k``
with distinct ``e_k``.  For Hermitian input the projections are orthogonal
(built as ``V_k V_k^dagger`` from the Jacobi eigenvectors); for general
diagonalizable input (:func:`riesz_resolve`) they are oblique.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .errors import AmbiguousClustering, NotRobust
from .matcore import as_matrix, dagger

CLUSTER_REL_TOL = 1e-8
AMBIGUITY_FACTOR = 10.0


@dataclass(frozen=True)
class SpectralResolution:
    eigenvalues: np.ndarray  # (d,) ascending by (real, imag)
    projections: np.ndarray  # (d, n, n)
    multiplicities: np.ndarray  # (d,) ints
    gap: float
    oblique: bool = False
    cluster_tol: float = 0.0
    source: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def d(self) -> int:
        return len(self.eigenvalues)

    @property
    def dim(self) -> int:
        return self.projections.shape[-1]

    def reconstruct(self) -> np.ndarray:
        return np.einsum("k,kij->ij", self.eigenvalues.astype(np.complex128), self.projections)

    def function(self, values) -> np.ndarray:
        """``sum_k values[k] P_k``, e.g. a robust observable ``sum_k m_k P_k``."""
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (self.d,):
            raise ValueError(f"expected {self.d} values, got shape {values.shape}")
        return np.einsum("k,kij->ij", values, self.projections)

    def index_of(self, value: complex) -> int:
        return int(np.argmin(np.abs(self.eigenvalues - value)))

    def invariant_defects(self) -> dict[str, float]:
        """Residuals of the projection identities (all ~0 for a valid resolution)."""
        P = self.projections
        n = self.dim
        prod = np.einsum("kij,ljm->klim", P, P)
        expected = np.zeros_like(prod)
        for k in range(self.d):
            expected[k, k] = P[k]
        out = {
            "orthogonality": float(np.max(np.abs(prod - expected))),
            "completeness": float(np.max(np.abs(P.sum(axis=0) - np.eye(n)))),
        }
        if not self.oblique:
            out["hermiticity"] = float(np.max(np.abs(P - dagger(P))))
        if self.source is not None:
            out["reconstruction"] = float(np.max(np.abs(self.reconstruct() - self.source)))
        return out


def default_cluster_tol(A: np.ndarray) -> float:
    return CLUSTER_REL_TOL * max(1.0, float(matcore.op_norm(A)))


def _gap(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    diffs = np.abs(values[:, None] - values[None, :])
    return float(np.min(diffs[~np.eye(len(values), dtype=bool)]))


def _check_ambiguity(values: np.ndarray, tol: float) -> None:
    diffs = np.abs(values[:, None] - values[None, :])
    bad = (diffs > tol) & (diffs < AMBIGUITY_FACTOR * tol)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise AmbiguousClustering(
            f"eigenvalues {values[i]:.6g} and {values[j]:.6g} are {diffs[i, j]:.3e} apart, "
            f"inside ({tol:.3e}, {AMBIGUITY_FACTOR * tol:.3e})"
        )


def resolve(A, cluster_tol: float | None = None, tol: float | None = None) -> SpectralResolution:
    """Orthogonal spectral resolution of a Hermitian matrix.

    Sorted eigenvalues are chain-merged: neighbours at distance ``<= cluster_tol``
    end up in the same cluster, whose eigenvalue is the cluster mean.
    """
    A = as_matrix(A)
    eig = matcore.herm_eig(A, tol)
    if cluster_tol is None:
        cluster_tol = CLUSTER_REL_TOL * max(1.0, float(np.max(np.abs(eig.eigenvalues))))
    lam = eig.eigenvalues
    spacing = np.diff(lam)
    amb = (spacing > cluster_tol) & (spacing < AMBIGUITY_FACTOR * cluster_tol)
    if amb.any():
        i = int(np.argmax(amb))
        raise AmbiguousClustering(
            f"eigenvalue spacing {spacing[i]:.3e} at {lam[i]:.6g} lies inside "
            f"({cluster_tol:.3e}, {AMBIGUITY_FACTOR * cluster_tol:.3e})"
        )
    breaks = np.flatnonzero(spacing > cluster_tol) + 1
    groups = np.split(np.arange(len(lam)), breaks)
    V = eig.eigenvectors
    values = np.array([lam[g].mean() for g in groups])
    projs = np.array([V[:, g] @ dagger(V[:, g]) for g in groups])
    mult = np.array([len(g) for g in groups])
    return SpectralResolution(values, projs, mult, _gap(values), False, cluster_tol, A)


def riesz_resolve(A, cluster_tol: float | None = None, tol: float | None = None) -> SpectralResolution:
    """Oblique spectral projections ``S E_k S^-1`` of a diagonalizable matrix."""
    A = as_matrix(A)
    eig = matcore.gen_eig(A, tol)
    if cluster_tol is None:
        cluster_tol = CLUSTER_REL_TOL * max(1.0, float(np.max(np.abs(eig.eigenvalues))))
    lam = eig.eigenvalues
    _check_ambiguity(lam, cluster_tol)
    groups = matcore._chain_clusters(lam, cluster_tol)
    values = np.array([lam[g].mean() for g in groups])
    order = np.lexsort((values.imag, values.real))
    groups = [groups[i] for i in order]
    values = values[order]
    S = eig.eigenvectors
    Sinv = np.linalg.inv(S)
    projs = np.array([S[:, g] @ Sinv[g, :] for g in groups])
    mult = np.array([len(g) for g in groups])
    return SpectralResolution(values, projs, mult, _gap(values), True, cluster_tol, A)


def reduced_resolvent(res: SpectralResolution, ell: int) -> np.ndarray:
    """``S_ell = sum_{k != ell} P_k / (e_k - e_ell)``."""
    if not 0 <= ell < res.d:
        raise IndexError(f"cluster index {ell} out of range for d={res.d}")
    weights = np.zeros(res.d, dtype=np.complex128)
    for k in range(res.d):
        if k != ell:
            weights[k] = 1.0 / (res.eigenvalues[k] - res.eigenvalues[ell])
    return res.function(weights)


def block_averages(res: SpectralResolution, M) -> np.ndarray:
    """``m_k = tr(P_k M P_k) / d_k`` for every cluster."""
    M = as_matrix(M)
    traces = np.einsum("kij,jl,kli->k", res.projections, M, res.projections)
    return traces / res.multiplicities


def divided_differences(nodes, values) -> np.ndarray:
    """Newton coefficients ``f[x_0], f[x_0, x_1], ...`` of the interpolant."""
    x = np.asarray(nodes, dtype=np.complex128)
    c = np.array(values, dtype=np.complex128)
    n = len(x)
    for k in range(n - 1):
        for j in range(n - 1, k, -1):
            c[j] = (c[j] - c[j - 1]) / (x[j] - x[j - k - 1])
    return c


def vandermonde_solve(nodes, values) -> np.ndarray:
    """Solve ``sum_n c_n x_k^n = f_k`` for ``c`` (Bjorck-Pereyra, primal system).

    The first stage forms Newton divided differences, the second converts the
    Newton form to monomial coefficients; no matrix is ever assembled.
    """
    x = np.asarray(nodes, dtype=np.complex128)
    c = divided_differences(x, values)
    n = len(x)
    for k in range(n - 2, -1, -1):
        for j in range(k, n - 1):
            c[j] = c[j] - x[k] * c[j + 1]
    return c


def leja_order(nodes) -> np.ndarray:
    """Permutation putting ``nodes`` in Leja order (largest modulus first)."""
    x = np.asarray(nodes, dtype=np.complex128)
    n = len(x)
    if n == 0:
        return np.zeros(0, dtype=int)
    order = [int(np.argmax(np.abs(x)))]
    logprod = np.zeros(n)
    for _ in range(n - 1):
        with np.errstate(divide="ignore"):
            logprod += np.log(np.abs(x - x[order[-1]]))
        logprod[order] = -np.inf
        order.append(int(np.argmax(logprod)))
    return np.array(order)


@dataclass(frozen=True)
class PolyCoeffs:
    coefficients: np.ndarray  # monomial, lowest degree first
    residual: float
    newton_nodes: np.ndarray | None = None
    newton_coefficients: np.ndarray | None = None

    def evaluate(self, A) -> np.ndarray:
        """``p(A)``, through the Newton form when it is available."""
        if self.newton_nodes is None:
            return poly_eval(A, self.coefficients)
        return newton_eval(A, self.newton_nodes, self.newton_coefficients)


def poly_eval(A, coefficients) -> np.ndarray:
    """``sum_n c_n A^n`` by Horner's rule."""
    A = as_matrix(A)
    n = A.shape[0]
    ident = np.eye(n, dtype=np.complex128)
    out = np.zeros_like(A)
    for c in coefficients[::-1]:
        out = out @ A + c * ident
    return out


def newton_eval(A, nodes, coefficients) -> np.ndarray:
    """``c_0 + (A - x_0)(c_1 + (A - x_1)(c_2 + ...))``, nested from the inside."""
    A = as_matrix(A)
    ident = np.eye(A.shape[0], dtype=np.complex128)
    n = len(coefficients)
    out = coefficients[n - 1] * ident
    for j in range(n - 2, -1, -1):
        out = (A - nodes[j] * ident) @ out + coefficients[j] * ident
    return out


def poly_coeffs(res: SpectralResolution, M, tol: float | None = None) -> PolyCoeffs:
    """Coefficients of the polynomial in ``A`` that reproduces the robust part of ``M``.

    Raises ``NotRobust`` when ``||sum_n c_n A^n - M|| > tol`` (default
    ``1e-8 * ||M||``), i.e. when ``M`` is not a function of ``A``.
    """
    M = as_matrix(M)
    m = block_averages(res, M)
    coeffs = vandermonde_solve(res.eigenvalues, m)
    # The monomial coefficients grow quickly with d; the residual is measured
    # on the same polynomial in Newton form over Leja-ordered nodes, which
    # avoids the cancellation of Horner's rule on large coefficients.
    perm = leja_order(res.eigenvalues)
    nodes = np.asarray(res.eigenvalues, dtype=np.complex128)[perm]
    newton = divided_differences(nodes, m[perm])
    A = res.source if res.source is not None else res.reconstruct()
    residual = float(matcore.op_norm(newton_eval(A, nodes, newton) - M))
    if tol is None:
        tol = 1e-8 * max(float(matcore.op_norm(M)), np.finfo(float).tiny)
    if residual > tol:
        raise NotRobust(f"polynomial residual {residual:.3e} exceeds {tol:.3e}")
    return PolyCoeffs(coeffs, residual, nodes, newton)
