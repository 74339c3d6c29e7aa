"""Concrete systems: Pauli strings, the periodic Heisenberg chain and its
boost-generated charges, the two-level examples, and seeded random ensembles.

Random draws use a PCG64 uniform stream turned into Gaussians by Box-Muller,
so a given seed always yields the same matrix within this build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import matcore
from .errors import DuplicateSite, SiteOutOfRange
from .matcore import dagger

MAX_QUBITS = 6

I2 = np.eye(2, dtype=np.complex128)
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULI = {"x": SX, "y": SY, "z": SZ, "i": I2}


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def box_muller(rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` standard normal draws from pairs of uniforms."""
    m = (size + 1) // 2
    u1 = 1.0 - rng.random(m)  # in (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:size]


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. standard complex Gaussians (E|z|^2 = 1)."""
    size = int(np.prod(shape))
    z = box_muller(rng, 2 * size) / math.sqrt(2.0)
    return (z[:size] + 1j * z[size:]).reshape(shape)


# ---------------------------------------------------------------------------
# Pauli algebra
# ---------------------------------------------------------------------------

def pauli_op(N: int, factors) -> np.ndarray:
    """Tensor product with the listed ``(site, axis)`` Paulis and identities elsewhere.

    Site 0 is the leftmost Kronecker factor.
    """
    ops = [I2] * N
    seen = set()
    for site, axis in factors:
        if not 0 <= site < N:
            raise SiteOutOfRange(f"site {site} not in [0, {N})")
        if site in seen:
            raise DuplicateSite(f"site {site} listed twice")
        if axis not in ("x", "y", "z"):
            raise ValueError(f"unknown axis {axis!r}")
        seen.add(site)
        ops[site] = PAULI[axis]
    return reduce(np.kron, ops)


def magnetization(N: int, axis: str = "z") -> np.ndarray:
    return sum(pauli_op(N, [(n, axis)]) for n in range(N))


def _bond(N: int, a: int, b: int) -> np.ndarray:
    """``sigma_a . sigma_b``."""
    return sum(pauli_op(N, [(a, ax), (b, ax)]) for ax in "xyz")


def heisenberg_chain(N: int, J: float = 1.0, normalize: bool = False) -> np.ndarray:
    """``-J sum_n sigma_n . sigma_{n+1}`` with periodic boundary conditions."""
    if not 2 <= N <= MAX_QUBITS:
        raise ValueError(f"N must be in [2, {MAX_QUBITS}]")
    if N == 2:
        # both periodic bonds coincide: 1-2 and 2-1
        H = -J * 2 * _bond(N, 0, 1)
    else:
        H = -J * sum(_bond(N, n, (n + 1) % N) for n in range(N))
    if normalize:
        H = H / matcore.op_norm(H)
    return H


def boost_operator(N: int, J: float = 1.0) -> np.ndarray:
    """``(1/2) sum_n n sigma_n . sigma_{n+1}`` with sites numbered from 1, periodic."""
    return 0.5 * J * sum((n + 1) * _bond(N, n, (n + 1) % N) for n in range(N))


# Pauli-string algebra for translation-invariant densities.  A string is a
# tuple over consecutive sites of "i", "x", "y", "z" with non-identity ends;
# a density maps strings starting at site 0 to coefficients.
_PRODUCT = {
    ("x", "y"): (1j, "z"), ("y", "z"): (1j, "x"), ("z", "x"): (1j, "y"),
    ("y", "x"): (-1j, "z"), ("z", "y"): (-1j, "x"), ("x", "z"): (-1j, "y"),
}


def _pauli_mul(a: str, b: str) -> tuple[complex, str]:
    if a == "i":
        return 1.0, b
    if b == "i":
        return 1.0, a
    if a == b:
        return 1.0, "i"
    return _PRODUCT[(a, b)]


def _string_product(p, op, q, oq) -> tuple[complex, int, tuple]:
    """``p`` placed at ``op`` times ``q`` placed at ``oq``: (phase, start, trimmed string)."""
    lo, hi = min(op, oq), max(op + len(p), oq + len(q))
    phase, out = 1.0, []
    for site in range(lo, hi):
        a = p[site - op] if 0 <= site - op < len(p) else "i"
        b = q[site - oq] if 0 <= site - oq < len(q) else "i"
        c, ab = _pauli_mul(a, b)
        phase *= c
        out.append(ab)
    first = next((k for k, a in enumerate(out) if a != "i"), None)
    if first is None:
        return phase, 0, ()
    last = max(k for k, a in enumerate(out) if a != "i")
    return phase, lo + first, tuple(out[first:last + 1])


_BOND = {("x", "x"): 1.0, ("y", "y"): 1.0, ("z", "z"): 1.0}


def _boost_density(q: dict, J: float) -> dict:
    """Density of ``-i[B, Q]`` on the infinite chain for translation-invariant ``Q``.

    With ``B = (J/2) sum_m m h_m``, a term ``[h_m, p]`` landing on a string
    that starts at ``o`` carries weight ``m - o`` relative to its class
    representative.  The leftover ``sum_j j tau^j [H, q]`` part cancels
    because ``Q`` commutes with ``H`` on the infinite chain.
    """
    out: dict = {}
    total: dict = {}
    for p, cp in q.items():
        for m in range(-1, len(p)):
            for h, ch in _BOND.items():
                f1, o1, s1 = _string_product(h, m, p, 0)
                f2, o2, s2 = _string_product(p, 0, h, m)
                for f, o, st, sign in ((f1, o1, s1, 1.0), (f2, o2, s2, -1.0)):
                    if not st:
                        continue
                    c = sign * f * cp * ch
                    total[st] = total.get(st, 0.0) + c
                    out[st] = out.get(st, 0.0) + (-1j) * 0.5 * J * (m - o) * c
    if any(abs(v) > 1e-12 for v in total.values()):
        raise ArithmeticError("density is not conserved on the infinite chain")
    return {st: c for st, c in out.items() if abs(c) > 1e-14}


def _periodic_sum(N: int, q: dict) -> np.ndarray:
    """``sum_j tau^j q`` on a periodic chain of ``N`` sites."""
    Q = np.zeros((2**N, 2**N), dtype=np.complex128)
    for st, c in q.items():
        if len(st) > N:
            raise ValueError(f"density of range {len(st)} does not fit on {N} sites")
        for j in range(N):
            Q += c * pauli_op(N, [((j + k) % N, a) for k, a in enumerate(st) if a != "i"])
    return Q


def boost_charges(N: int, n_max: int, J: float = 1.0) -> list[np.ndarray]:
    """``[Q_2, ..., Q_{n_max}]`` from ``Q_2 = H``, ``Q_{n+1} = -i[B, Q_n]``.

    The boost is applied to the translation-invariant local densities, as on
    an infinite chain, and each density is then summed around the ring.  The
    bare finite boost matrix (:func:`boost_operator`) has a jump in its
    position weights at the wrap bond that would break translation
    invariance.  Use :func:`commutator_norms` to inspect ``||[H, Q_n]||``.
    """
    if not 3 <= n_max <= N:
        raise ValueError("need 3 <= n_max <= N")
    q = {h: -J * c for h, c in _BOND.items()}
    charges = [heisenberg_chain(N, J)]
    while len(charges) < n_max - 1:
        q = _boost_density(q, J)
        charges.append(_periodic_sum(N, q))
    return charges


def commutator_norms(H: np.ndarray, charges) -> list[float]:
    return [float(matcore.op_norm(H @ Q - Q @ H)) for Q in charges]


def cyclic_shift(N: int) -> np.ndarray:
    """Permutation moving the state of site n to site n+1 (mod N)."""
    dim = 2**N
    T = np.zeros((dim, dim), dtype=np.complex128)
    for idx in range(dim):
        bits = [(idx >> (N - 1 - s)) & 1 for s in range(N)]
        shifted = [bits[(s - 1) % N] for s in range(N)]
        new = 0
        for b in shifted:
            new = (new << 1) | b
        T[new, idx] = 1.0
    return T


def basis_state(N: int, bits: str) -> np.ndarray:
    """Computational basis state, ``'0'`` = spin up (sigma_z = +1) per site."""
    if len(bits) != N:
        raise ValueError("need one bit per site")
    psi = np.zeros(2**N, dtype=np.complex128)
    psi[int(bits, 2)] = 1.0
    return psi


# ---------------------------------------------------------------------------
# Two-level examples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FragileExample:
    H: np.ndarray
    M: np.ndarray
    V: np.ndarray
    delta: float
    psi0: np.ndarray


def fragile_example(e: float = 0.0, m1: float = 1.0, m2: float = -1.0) -> FragileExample:
    """Doubly degenerate ``H = e I`` with a degeneracy-lifting symmetry ``M``."""
    if not m1 > m2:
        raise ValueError("need m1 > m2")
    return FragileExample(
        H=e * I2.copy(),
        M=np.diag([m1, m2]).astype(np.complex128),
        V=SX.copy(),
        delta=m1 - m2,
        psi0=np.array([1.0, 0.0], dtype=np.complex128),
    )


def zeno_saturation_sequence(n: int) -> tuple[float, float]:
    """``(eps_n, t_n)`` at which the Zeno divergence for ``sigma_z + eps sigma_x`` reaches 2.

    ``sqrt(1 + eps_n^2) = 2(n+1)/(2n+1)`` exactly, so ``t_n = (2n+1) pi``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    eps = math.sqrt(4 * n + 3) / (2 * n + 1)
    return eps, (2 * n + 1) * math.pi


def two_level_resummed(eps: float) -> np.ndarray:
    """Closed-form block-diagonal resummation for ``H = sigma_z``, ``V = sigma_x``."""
    return (math.sqrt(1.0 + eps * eps) - 1.0) / eps * SZ


def two_level_divergence(eps: float, t, *, frequency: float | None = None) -> np.ndarray:
    """``||exp(it(sigma_z + eps sigma_x)) - exp(it(sigma_z + eps V_H))||`` in closed form.

    Both propagators rotate by the angle ``t sqrt(1 + eps^2)`` about axes an
    angle apart whose chord is ``sqrt(2(1 - 1/sqrt(1 + eps^2)))``, so the
    oscillation frequency is ``sqrt(1 + eps^2)``.  ``frequency`` overrides it
    (used to test alternative closed forms).
    """
    t = np.asarray(t, dtype=float)
    amp = math.sqrt(2.0 * (1.0 - 1.0 / math.sqrt(1.0 + eps * eps)))
    w = math.sqrt(1.0 + eps * eps) if frequency is None else frequency
    return amp * np.abs(np.sin(t * w))


# ---------------------------------------------------------------------------
# Random ensembles
# ---------------------------------------------------------------------------

def random_hermitian(dim: int, seed: int, normalize: bool = True) -> np.ndarray:
    """``(A + A^dagger)/2`` for complex Gaussian ``A``, rescaled to ``||H|| = 1``."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    A = complex_gaussian(rng_for(seed), (dim, dim))
    H = 0.5 * (A + dagger(A))
    if normalize:
        H = H / matcore.op_norm(H)
    return H


def random_state(dim: int, seed: int) -> np.ndarray:
    psi = complex_gaussian(rng_for(seed), (dim,))
    return psi / np.linalg.norm(psi)


def random_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar unitary: QR of a complex Gaussian with the phase fix on R's diagonal."""
    Z = complex_gaussian(rng_for(seed), (dim, dim))
    Q, R = np.linalg.qr(Z)
    ph = np.diagonal(R) / np.abs(np.diagonal(R))
    return Q * ph


def hermitian_with_spectrum(eigenvalues, seed: int) -> np.ndarray:
    """``U diag(eigenvalues) U^dagger`` with a seeded Haar ``U``; repeats give degeneracy."""
    lam = np.asarray(eigenvalues, dtype=float)
    U = random_unitary(len(lam), seed)
    H = (U * lam) @ dagger(U)
    return 0.5 * (H + dagger(H))


def degenerate_hermitian(dim: int, seed: int, n_levels: int | None = None, min_gap: float = 0.2) -> np.ndarray:
    """Hermitian matrix with ``n_levels`` distinct eigenvalues (so some are degenerate).

    Levels are uniform in ``[-1, 1]`` conditioned on spacing ``>= min_gap``;
    the multiplicities are a random composition of ``dim``.
    """
    rng = rng_for(seed ^ 0x9E3779B97F4A7C15)
    if n_levels is None:
        n_levels = max(2, dim // 2)
    if (n_levels - 1) * min_gap > 2.0:
        raise ValueError("levels do not fit in [-1, 1] with this gap")
    slack = 2.0 - (n_levels - 1) * min_gap
    cuts = np.sort(rng.random(n_levels)) * slack
    levels = -1.0 + cuts + min_gap * np.arange(n_levels)
    mult = np.ones(n_levels, dtype=int)
    for _ in range(dim - n_levels):
        mult[int(rng.integers(n_levels))] += 1
    lam = np.repeat(levels, mult)
    return hermitian_with_spectrum(lam, seed)
