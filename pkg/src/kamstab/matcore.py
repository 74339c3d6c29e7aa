"""Dense complex linear algebra used throughout the package.

Everything here works on ``complex128`` numpy arrays.  The Hermitian
eigensolver is a cyclic complex Jacobi method that accepts stacks of
matrices ``(..., n, n)`` and rotates all of them at once, which is what the
time-grid code relies on for computing thousands of operator norms cheaply.
The general eigensolver (Householder-Hessenberg plus Wilkinson-shifted QR,
eigenvectors by inverse iteration) and the Pade matrix exponential are
single-matrix routines.  LU solves are delegated to ``numpy.linalg.solve``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DomainError,
    IllConditioned,
    NoConvergence,
    NotHermitian,
    NotPositiveDefinite,
    Overflow,
)

EPS = np.finfo(float).eps

# Structural tolerance used when callers pass ``tol=None``: 1e-10 * max(1, ||A||).
DEFAULT_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TOL = 1e-14
QR_ITERS_PER_EIGENVALUE = 30
COND_CAP = 1e10
EXPM_NORM_CAP = 1e8
PADE_THETA = 0.5


@dataclass(frozen=True)
class HermEig:
    eigenvalues: np.ndarray  # (..., n) real, ascending
    eigenvectors: np.ndarray  # (..., n, n) unitary, columns

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues[..., None, :]) @ dagger(V)


@dataclass(frozen=True)
class GenEig:
    eigenvalues: np.ndarray  # (n,) complex, sorted by (real, imag)
    eigenvectors: np.ndarray  # (n, n) unit columns
    condition: float
    residual: float


def dagger(A: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(A, -1, -2))


def as_matrix(A, *, name: str = "matrix") -> np.ndarray:
    """Coerce to a square, finite complex128 array (stacks allowed)."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def fro(A: np.ndarray) -> np.ndarray | float:
    return np.sqrt(np.sum(np.abs(A) ** 2, axis=(-2, -1)))


def hermiticity_defect(A: np.ndarray) -> float:
    return float(np.max(fro(A - dagger(A))))


def _scale(A: np.ndarray) -> float:
    return max(1.0, float(np.max(fro(A))))


# ---------------------------------------------------------------------------
# Hermitian eigenproblem: cyclic Jacobi
# ---------------------------------------------------------------------------

def herm_eig(A, tol: float | None = None, *, check: bool = True,
             max_sweeps: int = JACOBI_MAX_SWEEPS) -> HermEig:
    """Eigendecomposition of a Hermitian matrix (or a stack of them).

    Each ``(p, q)`` rotation is the phase-adjusted real Jacobi rotation
    ``G = diag(1, exp(-i arg a_pq)) @ [[c, s], [-s, c]]`` which annihilates
    ``a_pq``.  Sweeps stop once the off-diagonal Frobenius mass drops below
    ``1e-14 * ||A||_F`` for every matrix in the stack.

    Raises ``NotHermitian`` when ``||A - A^dagger||_F > tol`` and
    ``NoConvergence`` after ``max_sweeps`` sweeps.
    """
    A = as_matrix(A)
    if check:
        if tol is None:
            tol = DEFAULT_TOL * _scale(A)
        defect = hermiticity_defect(A)
        if defect > tol:
            raise NotHermitian(f"||A - A^dagger|| = {defect:.3e} exceeds {tol:.3e}")
    batch_shape = A.shape[:-2]
    n = A.shape[-1]
    # Batch axis last so that every row/column slice below is contiguous.
    work = np.ascontiguousarray((0.5 * (A + dagger(A))).reshape((-1, n, n)).transpose(1, 2, 0))
    B = work.shape[-1]
    V = np.zeros((n, n, B), dtype=np.complex128)
    V[np.arange(n), np.arange(n), :] = 1.0

    target = JACOBI_OFF_TOL * np.sqrt(np.sum(np.abs(work) ** 2, axis=(0, 1)))
    offmask = ~np.eye(n, dtype=bool)
    tiny = np.finfo(float).tiny
    for _sweep in range(max_sweeps + 1):
        off = np.sqrt(np.sum(np.abs(work[offmask]) ** 2, axis=0))
        if np.all(off <= target):
            break
        if _sweep == max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                mag = np.abs(apq)
                active = mag > tiny
                if not active.any():
                    continue
                safe = np.where(active, mag, 1.0)
                phase = np.where(active, apq / safe, 1.0)
                app = work[p, p].real.copy()
                aqq = work[q, q].real.copy()
                with np.errstate(over="ignore"):
                    theta = (aqq - app) / (2.0 * safe)
                    t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta == 0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cphase = np.conj(phase)
                sc = s * cphase
                cc = c * cphase
                cp = work[:, p].copy()
                cq = work[:, q]
                newp = cp * c - cq * sc
                newq = cp * s + cq * cc
                work[:, p] = newp
                work[:, q] = newq
                work[p, :] = np.conj(newp)
                work[q, :] = np.conj(newq)
                work[p, p] = app - t * mag
                work[q, q] = aqq + t * mag
                work[p, q] = 0.0
                work[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = vp * c - vq * sc
                V[:, q] = vp * s + vq * cc

    evals = np.real(np.diagonal(work, axis1=0, axis2=1))  # (B, n)
    V = V.transpose(2, 0, 1)
    order = np.argsort(evals, axis=-1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=-1)
    V = np.take_along_axis(V, order[:, None, :], axis=-1)
    return HermEig(evals.reshape(batch_shape + (n,)), V.reshape(batch_shape + (n, n)))


def op_norm(A) -> np.ndarray | float:
    """Largest singular value, as sqrt(lambda_max(A^dagger A)); stacks allowed."""
    A = as_matrix(A)
    gram = dagger(A) @ A
    lam = herm_eig(gram, check=False).eigenvalues[..., -1]
    out = np.sqrt(np.maximum(lam, 0.0))
    return float(out) if out.ndim == 0 else out


def matfun_herm(A, f: Callable, tol: float | None = None) -> np.ndarray:
    """Primary matrix function ``f(A)`` evaluated in the eigenbasis of ``A``."""
    eig = herm_eig(A, tol)
    lam = eig.eigenvalues
    try:
        vals = np.asarray(f(lam), dtype=np.complex128)
        if vals.shape != lam.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.array([complex(f(x)) for x in lam.ravel()]).reshape(lam.shape)
    if not np.all(np.isfinite(vals)):
        raise DomainError("f is not defined at every eigenvalue")
    V = eig.eigenvectors
    return (V * vals[..., None, :]) @ dagger(V)


def inv_sqrt_psd(A, tol: float | None = None) -> np.ndarray:
    """Hermitian positive-definite ``B`` with ``B @ B = inv(A)``."""
    eig = herm_eig(A)
    if tol is None:
        tol = DEFAULT_TOL * _scale(np.asarray(A))
    lam = eig.eigenvalues
    if np.min(lam) <= tol:
        raise NotPositiveDefinite(f"minimum eigenvalue {np.min(lam):.3e} <= {tol:.3e}")
    V = eig.eigenvectors
    return (V * (1.0 / np.sqrt(lam))[..., None, :]) @ dagger(V)


# ---------------------------------------------------------------------------
# Matrix exponential: scaling and squaring with diagonal Pade [6/6]
# ---------------------------------------------------------------------------

_PADE6 = [
    math.factorial(12 - k) * math.factorial(6)
    / (math.factorial(12) * math.factorial(k) * math.factorial(6 - k))
    for k in range(7)
]


def expm(A, t: float = 1.0, *, norm_cap: float = EXPM_NORM_CAP) -> np.ndarray:
    """``exp(t A)`` by Pade [6/6] after scaling ``||tA||_1 / 2^s <= 0.5``."""
    A = as_matrix(A)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    X = t * A
    norm1 = float(np.max(np.sum(np.abs(X), axis=-2))) if X.size else 0.0
    if norm1 > norm_cap:
        raise Overflow(f"||tA||_1 = {norm1:.3e} exceeds cap {norm_cap:.3e}")
    s = 0
    if norm1 > PADE_THETA:
        s = int(math.ceil(math.log2(norm1 / PADE_THETA)))
    X = X / (2.0 ** s)
    n = A.shape[-1]
    ident = np.broadcast_to(np.eye(n, dtype=np.complex128), X.shape)
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    c = _PADE6
    even = c[0] * ident + c[2] * X2 + c[4] * X4 + c[6] * X6
    odd = X @ (c[1] * ident + c[3] * X2 + c[5] * X4)
    R = np.linalg.solve(even - odd, even + odd)
    for _ in range(s):
        R = R @ R
    return R


# ---------------------------------------------------------------------------
# General (non-Hermitian) eigenproblem
# ---------------------------------------------------------------------------

def hessenberg(A) -> np.ndarray:
    """Upper Hessenberg form by Householder similarity reflections."""
    H = as_matrix(A).copy()
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        lead = x[0]
        phase = lead / abs(lead) if lead != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        H[k + 1:, :] -= 2.0 * np.outer(v, np.conj(v) @ H[k + 1:, :])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, np.conj(v))
        H[k + 2:, k] = 0.0
    return H


def _wilkinson(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    mu1 = d - (b * c) / (half + disc) if half + disc != 0 else d
    mu2 = d - (b * c) / (half - disc) if half - disc != 0 else d
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def _qr_step(B: np.ndarray, mu: complex) -> None:
    m = B.shape[0]
    B[np.diag_indices(m)] -= mu
    rots = []
    for k in range(m - 1):
        a, b = B[k, k], B[k + 1, k]
        r = math.hypot(abs(a), abs(b))
        if r == 0.0:
            G = np.eye(2, dtype=np.complex128)
        else:
            G = np.array([[np.conj(a), np.conj(b)], [-b, a]]) / r
        B[k:k + 2, k:] = G @ B[k:k + 2, k:]
        B[k + 1, k] = 0.0
        rots.append(G)
    for k, G in enumerate(rots):
        hi = min(k + 3, m)
        B[:hi, k:k + 2] = B[:hi, k:k + 2] @ dagger(G)
    B[np.diag_indices(m)] += mu


def hessenberg_qr_eigvals(A) -> np.ndarray:
    """Eigenvalues by Wilkinson-shifted QR iteration on the Hessenberg form."""
    H = hessenberg(A)
    n = H.shape[0]
    evals = np.zeros(n, dtype=np.complex128)
    scale = max(float(np.max(np.abs(H))) if n else 0.0, np.finfo(float).tiny)
    hi = n - 1
    iters = 0
    total = 0
    while hi >= 0:
        if hi == 0:
            evals[0] = H[0, 0]
            break
        lo = hi
        while lo > 0:
            sub = abs(H[lo, lo - 1])
            if sub <= EPS * (abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])) or sub <= EPS * 1e-3 * scale:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            evals[hi] = H[hi, hi]
            hi -= 1
            iters = 0
            continue
        iters += 1
        total += 1
        if total > QR_ITERS_PER_EIGENVALUE * n:
            raise NoConvergence("shifted QR iteration did not converge")
        if iters % 11 == 10:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * (1.0 + 0.5j)
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        block = H[lo:hi + 1, lo:hi + 1].copy()
        _qr_step(block, mu)
        H[lo:hi + 1, lo:hi + 1] = block
    return evals


def _chain_clusters(values: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage clusters of complex values at distance <= tol."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def condition_number(S: np.ndarray) -> float:
    """2-norm condition estimate ``||S|| * ||S^-1||`` (inf when singular)."""
    try:
        with np.errstate(all="ignore"):
            inv = np.linalg.inv(S)
    except np.linalg.LinAlgError:
        return math.inf
    if not np.all(np.isfinite(inv)):
        return math.inf
    return float(op_norm(S) * op_norm(inv))


def gen_eig(A, tol: float | None = None, *, cond_cap: float = COND_CAP) -> GenEig:
    """Eigenpairs of a diagonalizable complex matrix.

    Eigenvectors come from inverse iteration (an initial solve plus two
    refinement solves).  Vectors belonging to a repeated eigenvalue are
    orthogonalised against their predecessors before each solve, so a
    diagonalizable eigenspace yields independent vectors while a Jordan
    block collapses onto one direction and trips ``IllConditioned``.
    """
    A = as_matrix(A)
    n = A.shape[0]
    scale = _scale(A)
    if tol is None:
        tol = DEFAULT_TOL
    evals = hessenberg_qr_eigvals(A)
    order = np.lexsort((evals.imag, evals.real))
    evals = evals[order]

    rng = np.random.default_rng(0x5EED)
    ident = np.eye(n, dtype=np.complex128)
    shift = 8.0 * EPS * scale
    vecs = np.zeros((n, n), dtype=np.complex128)
    for group in _chain_clusters(evals, 1e-8 * scale):
        done: list[np.ndarray] = []
        for i in group:
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            for it in range(3):
                for u in done:
                    x = x - u * (np.conj(u) @ x)
                x = x / np.linalg.norm(x)
                sigma = evals[i] + shift
                for _attempt in range(4):
                    try:
                        x = np.linalg.solve(A - sigma * ident, x)
                        break
                    except np.linalg.LinAlgError:
                        sigma = evals[i] + shift * (1 + 1j) * 1e3
                x = x / np.linalg.norm(x)
            k = int(np.argmax(np.abs(x)))
            x = x * (abs(x[k]) / x[k])
            vecs[:, i] = x
            done.append(x)

    residual = float(np.max(np.linalg.norm(A @ vecs - vecs * evals, axis=0))) if n else 0.0
    cond = condition_number(vecs) if n else 1.0
    if cond > cond_cap:
        raise IllConditioned(f"eigenvector matrix condition {cond:.3e} exceeds {cond_cap:.1e}")
    if residual > tol * scale:
        raise NoConvergence(f"eigenpair residual {residual:.3e} exceeds {tol * scale:.3e}")
    return GenEig(evals, vecs, cond, residual)
