"""Dense linear algebra for chains of spin-1/2 sites.

Basis convention (used everywhere in the package): a configuration index
``j`` in ``0 .. 2**L - 1`` stores site 1 in its most significant bit, and a
bit value of 0 means spin up (sigma^z eigenvalue +1). This is exactly the
ordering produced by ``np.kron(op_1, op_2, ..., op_L)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

NORM_TOL = 1e-12
EIG_FLOOR = -1e-10


@dataclass(frozen=True, eq=False)
class PureState:
    """State vector of an ``L``-site chain."""

    L: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if self.L < 1 or amps.shape != (2**self.L,):
            raise ValueError(f"amplitude vector of shape {amps.shape} does not fit L={self.L}")
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return 2**self.L

    def norm_error(self) -> float:
        return abs(np.vdot(self.amps, self.amps).real - 1.0)

    def to_density(self) -> DensityMatrix:
        return DensityMatrix(self.L, np.outer(self.amps, self.amps.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density matrix of an ``L``-site chain."""

    L: int
    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        D = 2**self.L
        if self.L < 1 or mat.shape != (D, D):
            raise ValueError(f"matrix of shape {mat.shape} does not fit L={self.L}")
        object.__setattr__(self, "mat", mat)

    @property
    def dim(self) -> int:
        return 2**self.L

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.mat - self.mat.conj().T)))

    def trace_error(self) -> float:
        return abs(np.trace(self.mat) - 1.0)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.mat + self.mat.conj().T))[0])

    def is_valid(self, tol: float = NORM_TOL, floor: float = EIG_FLOOR) -> bool:
        return (
            self.hermiticity_error() <= tol
            and self.trace_error() <= tol
            and self.min_eigenvalue() >= floor
        )


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.shape != (2, 2):
            raise ValueError("local unitary must be 2x2")
        if np.max(np.abs(u.conj().T @ u - IDENTITY)) > NORM_TOL:
            raise ValueError("matrix is not unitary")
        object.__setattr__(self, "u", u)


def _check_site(site: int, L: int):
    if L < 1 or not 1 <= site <= L:
        raise ValueError(f"site {site} outside 1..{L}")


def embed_site_operator(op, site: int, L: int) -> np.ndarray:
    """Return ``I x ... x op x ... x I`` with ``op`` acting on ``site`` (1-based)."""
    _check_site(site, L)
    op = np.asarray(op, dtype=complex)
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (L - site), dtype=complex)
    return np.kron(np.kron(left, op), right)


def _half_dims(L: int) -> tuple[int, int]:
    if L % 2:
        raise ValueError(f"half-chain cut needs an even number of sites, got L={L}")
    dA = 2 ** (L // 2)
    return dA, 2**L // dA


def partial_trace_half(rho: DensityMatrix) -> DensityMatrix:
    """Reduced density matrix of sites ``1 .. L/2``."""
    dA, dB = _half_dims(rho.L)
    reduced = np.einsum("ijkj->ik", rho.mat.reshape(dA, dB, dA, dB))
    return DensityMatrix(rho.L // 2, reduced)


def partial_transpose_half(rho: DensityMatrix) -> DensityMatrix:
    """Transpose the indices belonging to sites ``1 .. L/2``.

    The result is Hermitian with unit trace but need not be positive, so
    it should not be fed to routines that assume a physical state.
    """
    dA, dB = _half_dims(rho.L)
    pt = rho.mat.reshape(dA, dB, dA, dB).transpose(2, 1, 0, 3).reshape(dA * dB, dA * dB)
    return DensityMatrix(rho.L, pt)


def apply_local_unitaries(us, vectors: np.ndarray, L: int) -> np.ndarray:
    """Apply ``us[0] x ... x us[L-1]`` to the first axis of ``vectors``.

    ``vectors`` has shape ``(2**L,)`` or ``(2**L, K)``; columns are
    transformed independently.
    """
    us = np.asarray(us, dtype=complex)
    if us.shape != (L, 2, 2):
        raise ValueError(f"expected {L} local 2x2 unitaries, got shape {us.shape}")
    v = np.asarray(vectors, dtype=complex)
    extra = v.shape[1:]
    t = v.reshape((2,) * L + (-1,))
    for site in range(L):
        # contract site axis with u, then move the new axis back in place
        t = np.moveaxis(np.tensordot(us[site], t, axes=([1], [site])), 0, site)
    return t.reshape((2**L,) + extra)


def conjugate_by_local_unitaries(us, mat: np.ndarray, L: int) -> np.ndarray:
    """Return ``U mat U^dagger`` for the product unitary ``U = us[0] x ... x us[L-1]``."""
    left = apply_local_unitaries(us, mat, L)
    return apply_local_unitaries(us, left.conj().T, L).conj().T


def rotated_diagonal(us, mat: np.ndarray, L: int) -> np.ndarray:
    """Diagonal of ``U mat U^dagger`` for ``U = us[0] x ... x us[L-1]``, without forming the product.

    Sites are absorbed one at a time; each step contracts the ket and bra
    index of one site and keeps only their diagonal, halving the work left.
    """
    us = np.asarray(us, dtype=complex)
    if us.shape != (L, 2, 2):
        raise ValueError(f"expected {L} local 2x2 unitaries, got shape {us.shape}")
    t = np.asarray(mat, dtype=complex).reshape(1, 2, 2 ** (L - 1), 2, 2 ** (L - 1))
    for site in range(L):
        u = us[site]
        t = np.einsum("ja,pakbl->pjkbl", u, t)
        t = np.einsum("pjkbl,jb->pjkl", t, u.conj())
        rest = 2 ** (L - site - 2) if site < L - 1 else 1
        p = t.shape[0] * 2
        t = t.reshape(p, 2, rest, 2, rest) if site < L - 1 else t.reshape(p)
    return t


def product_state(spinors) -> np.ndarray:
    """Kronecker product of single-site 2-vectors, site 1 first."""
    out = np.ones(1, dtype=complex)
    for s in spinors:
        out = np.kron(out, np.asarray(s, dtype=complex))
    return out


def _bloch_spinors(rng: np.random.Generator, L: int) -> np.ndarray:
    cos_theta = rng.uniform(-1.0, 1.0, size=L)
    phi = rng.uniform(0.0, 2 * np.pi, size=L)
    theta = np.arccos(cos_theta)
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)


def random_product_state(L: int, rng_seed=None) -> PureState:
    """Product of single spins pointing along independent uniform directions on the Bloch sphere."""
    if L < 1:
        raise ValueError("L must be positive")
    rng = np.random.default_rng(rng_seed)
    return PureState(L, product_state(_bloch_spinors(rng, L)))


def random_separable_mixed(L: int, alpha_max: int, rng_seed=None) -> DensityMatrix:
    """Convex mixture of ``alpha_max`` random product states with flat-Dirichlet weights."""
    if alpha_max < 1:
        raise ValueError("alpha_max must be at least 1")
    rng = np.random.default_rng(rng_seed)
    weights = rng.dirichlet(np.ones(alpha_max))
    cols = np.stack([product_state(_bloch_spinors(rng, L)) for _ in range(alpha_max)], axis=1)
    cols = cols * np.sqrt(weights)
    rho = cols @ cols.conj().T
    return DensityMatrix(L, rho / np.trace(rho).real)
