"""Spin-chain Hamiltonians, exact diagonalization and time evolution.

Energies are in units of the nearest-neighbour coupling and time in units
of its inverse (hbar = 1).
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import SIGMA_X, SIGMA_Y, SIGMA_Z, DensityMatrix, PureState

NI_ZZ_COUPLING = 0.2


class ModelKind(str, enum.Enum):
    TFI_PLUS = "tfi+"
    TFI_MINUS = "tfi-"
    XX = "xx"
    NI_TFI_PLUS = "ni-tfi+"


class NumericalDriftError(RuntimeError):
    """Integrator lost trace beyond tolerance; the step size is too large."""


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    L: int
    h: float
    zz_coupling: float | None = None
    pbc: bool = True

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.L < 2:
            raise ValueError("models need at least two sites")
        zz = self.zz_coupling
        if zz is None:
            zz = NI_ZZ_COUPLING if kind is ModelKind.NI_TFI_PLUS else 0.0
        if kind is not ModelKind.NI_TFI_PLUS and zz != 0.0:
            raise ValueError("zz coupling is only defined for the non-integrable Ising chain")
        object.__setattr__(self, "zz_coupling", float(zz))

    @property
    def boundary(self) -> str:
        return "periodic" if self.pbc else "open"


def bonds(L: int, pbc: bool) -> list[tuple[int, int]]:
    """Nearest-neighbour pairs ``(i, j)`` with 1-based sites; the L=2 ring has one bond."""
    out = [(i, i + 1) for i in range(1, L)]
    if pbc and L > 2:
        out.append((L, 1))
    return out


@functools.lru_cache(maxsize=None)
def _site_ops(L: int):
    ops = {}
    for name, m in (("x", SIGMA_X), ("y", SIGMA_Y), ("z", SIGMA_Z)):
        ops[name] = [
            sp.kron(sp.kron(sp.identity(2**i, format="csr"), sp.csr_matrix(m)), sp.identity(2 ** (L - i - 1)), format="csr")
            for i in range(L)
        ]
    return ops


@functools.lru_cache(maxsize=64)
def hamiltonian_terms(kind: ModelKind, L: int, pbc: bool, zz: float):
    """Return ``(coupling_part, field_part)`` with ``H = coupling_part + h * field_part``."""
    kind = ModelKind(kind)
    ops = _site_ops(L)
    x, y, z = ops["x"], ops["y"], ops["z"]
    D = 2**L
    coupling = sp.csr_matrix((D, D), dtype=complex)
    for i, j in bonds(L, pbc):
        a, b = i - 1, j - 1
        if kind in (ModelKind.TFI_PLUS, ModelKind.NI_TFI_PLUS):
            coupling = coupling - x[a] @ x[b]
        elif kind is ModelKind.TFI_MINUS:
            coupling = coupling + x[a] @ x[b]
        else:
            coupling = coupling - x[a] @ x[b] - y[a] @ y[b]
        if zz:
            coupling = coupling + zz * (z[a] @ z[b])
    fieldpart = sp.csr_matrix((D, D), dtype=complex)
    for i in range(1, L + 1):
        sign = (-1) ** i if kind is ModelKind.XX else 1
        fieldpart = fieldpart - sign * z[i - 1]
    return coupling.tocsr(), fieldpart.tocsr()


def sparse_hamiltonian(spec: ModelSpec) -> sp.csr_matrix:
    coupling, fieldpart = hamiltonian_terms(spec.kind, spec.L, spec.pbc, spec.zz_coupling)
    return (coupling + spec.h * fieldpart).tocsr()


def build_hamiltonian(spec: ModelSpec) -> np.ndarray:
    """Dense Hamiltonian matrix for ``spec``."""
    return sparse_hamiltonian(spec).toarray()


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Full eigendecomposition; ``vectors[:, k]`` belongs to ``energies[k]``."""

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def L(self) -> int:
        return int(round(math.log2(self.vectors.shape[0])))

    @property
    def eigenstates(self) -> list[PureState]:
        return [PureState(self.L, self.vectors[:, k]) for k in range(self.vectors.shape[1])]


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude amplitude is real and positive."""
    vectors = np.array(vectors, dtype=complex, copy=True)
    single = vectors.ndim == 1
    if single:
        vectors = vectors[:, None]
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    vectors *= (np.abs(pivots) / pivots)[None, :]
    return vectors[:, 0] if single else vectors


def diagonalize(H: np.ndarray) -> Spectrum:
    H = np.asarray(H)
    scale = max(1.0, float(np.max(np.abs(H))))
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    if np.max(np.abs(H - H.conj().T)) > 1e-12 * scale:
        raise ValueError("matrix is not Hermitian")
    energies, vectors = np.linalg.eigh(H)
    return Spectrum(energies, fix_phases(vectors))


def ground_state(spec: ModelSpec) -> tuple[float, PureState]:
    """Lowest eigenpair; dense for small chains, Lanczos from L=10 up."""
    if spec.L >= 10:
        H = sparse_hamiltonian(spec)
        v0 = np.ones(H.shape[0], dtype=complex)
        w, v = spla.eigsh(H, k=1, which="SA", v0=v0, tol=1e-12)
        e0, vec = float(w[0]), v[:, 0]
    else:
        w, v = scipy.linalg.eigh(build_hamiltonian(spec), subset_by_index=[0, 0])
        e0, vec = float(w[0]), v[:, 0]
    vec = vec / np.linalg.norm(vec)
    return e0, PureState(spec.L, fix_phases(vec))


def evolve_unitary(state: PureState, spectrum: Spectrum, t: float) -> PureState:
    """``exp(-iHt)|psi>`` through the eigenbasis of H."""
    V = spectrum.vectors
    if V.shape[0] != state.dim:
        raise ValueError("state and spectrum dimensions differ")
    if t == 0:
        return state
    coeffs = V.conj().T @ state.amps
    return PureState(state.L, V @ (np.exp(-1j * spectrum.energies * t) * coeffs))


def evolve_unitary_times(state: PureState, spectrum: Spectrum, times) -> np.ndarray:
    """Evolved amplitudes at every time, shape ``(len(times), 2**L)``."""
    V = spectrum.vectors
    if V.shape[0] != state.dim:
        raise ValueError("state and spectrum dimensions differ")
    coeffs = V.conj().T @ state.amps
    phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), spectrum.energies))
    return (phases * coeffs) @ V.T


# --- Lindblad dynamics -------------------------------------------------------


def default_dt(gamma: float, bohr_width: float = 0.0) -> float:
    """Step for the RK4 integrator: 0.01, shrunk for fast dissipation or a wide spectrum.

    ``bohr_width`` is ``E_max - E_min`` of the Hamiltonian, the fastest
    coherence frequency; beyond 4 it sets the step.
    """
    return 0.01 / max(1.0, gamma * 10, bohr_width / 4)


@dataclass(frozen=True)
class LindbladConfig:
    """Settings for ``d rho/dt = -i[H, rho] + gamma sum_i (X_i rho X_i - rho)``."""

    gamma: float
    dt: float | None = None  # None: chosen from gamma and the spectrum when integrating
    include_hamiltonian: bool = True
    method: str = "rk4"
    max_trace_drift: float = field(default=1e-6, repr=False)

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.method not in ("rk4", "split"):
            raise ValueError(f"unknown integration method {self.method!r}")


def _flip_sum(rho: np.ndarray, L: int) -> np.ndarray:
    """``sum_i X_i rho X_i`` via index bit flips."""
    t = rho.reshape((2,) * (2 * L))
    acc = np.zeros_like(t)
    for i in range(L):
        acc += np.flip(t, axis=(i, L + i))
    return acc.reshape(rho.shape)


def dephase_x(rho: np.ndarray, L: int, p: float) -> np.ndarray:
    """Apply ``rho -> (1-p) rho + p X_i rho X_i`` on every site."""
    if p == 0:
        return rho
    t = rho.reshape((2,) * (2 * L))
    for i in range(L):
        t = (1 - p) * t + p * np.flip(t, axis=(i, L + i))
    return t.reshape(rho.shape)


def dissipative_flip_probability(gamma: float, t: float) -> float:
    """Per-site flip probability of the exact dissipator flow over time ``t``."""
    return 0.5 * (1.0 - math.exp(-2.0 * gamma * t))


class _Generator:
    def __init__(self, L: int, spec: ModelSpec | None, cfg: LindbladConfig):
        self.L = L
        self.gamma = cfg.gamma
        self.H = build_hamiltonian(spec) if cfg.include_hamiltonian else None

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        if self.H is not None:
            a = self.H @ rho
            out += -1j * (a - a.conj().T)
        if self.gamma:
            out += self.gamma * (_flip_sum(rho, self.L) - self.L * rho)
        return out


def _hermitize(m):
    return 0.5 * (m + m.conj().T)


class _Propagator:
    """Advances a density matrix through successive time segments."""

    def __init__(self, L: int, spec: ModelSpec | None, cfg: LindbladConfig):
        self.L, self.spec, self.cfg = L, spec, cfg
        width = 0.0
        if cfg.method == "rk4":
            self.gen = _Generator(L, spec, cfg)
            if self.gen.H is not None:
                e = np.linalg.eigvalsh(self.gen.H)
                width = float(e[-1] - e[0])
        elif cfg.include_hamiltonian:
            self.spectrum = diagonalize(build_hamiltonian(spec))
        self.dt = cfg.dt if cfg.dt is not None else default_dt(cfg.gamma, width)
        self._unitaries = {}

    def _unitary(self, dt):
        u = self._unitaries.get(dt)
        if u is None:
            V, E = self.spectrum.vectors, self.spectrum.energies
            u = (V * np.exp(-1j * E * dt)) @ V.conj().T
            self._unitaries[dt] = u
        return u

    def advance(self, rho: np.ndarray, duration: float) -> np.ndarray:
        if duration <= 0:
            return rho
        cfg, L = self.cfg, self.L
        if cfg.method == "split" and not cfg.include_hamiltonian:
            return dephase_x(rho, L, dissipative_flip_probability(cfg.gamma, duration))
        n = max(1, math.ceil(duration / self.dt - 1e-9))
        dt = duration / n
        if cfg.method == "rk4":
            f = self.gen
            for _ in range(n):
                k1 = f(rho)
                k2 = f(rho + 0.5 * dt * k1)
                k3 = f(rho + 0.5 * dt * k2)
                k4 = f(rho + dt * k3)
                rho = _hermitize(rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
            return rho
        # Strang splitting with exact dissipator and exact unitary sub-steps
        u = self._unitary(dt)
        half_p = dissipative_flip_probability(cfg.gamma, 0.5 * dt)
        for _ in range(n):
            rho = dephase_x(rho, L, half_p)
            a = u @ rho
            rho = u @ a.conj().T
            rho = dephase_x(_hermitize(rho), L, half_p)
        return rho


def lindblad_trajectory(
    rho: DensityMatrix, spec: ModelSpec | None, cfg: LindbladConfig, times
) -> list[DensityMatrix]:
    """Density matrices at each of the non-decreasing ``times`` (starting from t=0).

    ``spec`` may be ``None`` when the Hamiltonian is switched off, which also
    admits single-site chains.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and sorted")
    if spec is None:
        if cfg.include_hamiltonian:
            raise ValueError("a model is required when the Hamiltonian is included")
    elif rho.L != spec.L:
        raise ValueError("state and model sizes differ")
    prop = _Propagator(rho.L, spec, cfg)
    current, t_now, out = rho.mat.copy(), 0.0, []
    for t in times:
        current = prop.advance(current, t - t_now)
        t_now = t
        drift = abs(np.trace(current) - 1.0)
        if drift > cfg.max_trace_drift:
            raise NumericalDriftError(f"trace drifted by {drift:.2e} at t={t}; reduce dt")
        out.append(DensityMatrix(rho.L, current.copy()))
    return out


def evolve_lindblad(rho: DensityMatrix, spec: ModelSpec | None, cfg: LindbladConfig, t: float) -> DensityMatrix:
    if t < 0:
        raise ValueError("t must be non-negative")
    return lindblad_trajectory(rho, spec, cfg, [t])[0]
