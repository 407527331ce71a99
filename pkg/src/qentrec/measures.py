"""Half-chain entanglement entropy and logarithmic negativity."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .hilbert import DensityMatrix, PureState, _half_dims, partial_trace_half, partial_transpose_half

EIG_CUTOFF = 1e-14
CLAMP_TOL = 1e-9


class MeasureKind(str, enum.Enum):
    ENTROPY = "entropy"
    LOG_NEGATIVITY = "log_negativity"


@dataclass(frozen=True)
class EntanglementValue:
    """An entanglement value with its unit fixed by ``kind``.

    Entropy is in nats, log-negativity in bits.
    """

    kind: MeasureKind
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"{self.kind.value} must be non-negative, got {self.value}")

    def __float__(self):
        return float(self.value)


class CorruptedStateError(ValueError):
    """Raised when a numerical measure falls clearly outside its physical range."""


def _entropy_from_probs(p: np.ndarray) -> np.ndarray:
    p = np.where(p > EIG_CUTOFF, p, 1.0)
    return -np.sum(p * np.log(p), axis=-1)


def half_chain_entropy(state: PureState | DensityMatrix) -> EntanglementValue:
    """Von Neumann entropy of the reduced state of sites ``1 .. L/2``."""
    if isinstance(state, PureState):
        dA, dB = _half_dims(state.L)
        m = state.amps.reshape(dA, dB)
        reduced = m @ m.conj().T
    else:
        reduced = partial_trace_half(state).mat
    evals = np.linalg.eigvalsh(0.5 * (reduced + reduced.conj().T))
    value = float(_entropy_from_probs(evals))
    return EntanglementValue(MeasureKind.ENTROPY, max(value, 0.0))


def _clamp(raw: float) -> float:
    if raw < -CLAMP_TOL:
        raise CorruptedStateError(f"log-negativity {raw:.3e} is negative beyond tolerance")
    return max(raw, 0.0)


def log_negativity(state: PureState | DensityMatrix) -> EntanglementValue:
    """``log2`` of the trace norm of the partial transpose over the first half-chain."""
    if isinstance(state, PureState):
        raw = float(pure_log_negativities(state.amps[:, None], state.L)[0])
    else:
        pt = partial_transpose_half(state).mat
        evals = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
        raw = float(np.log2(np.sum(np.abs(evals))))
    return EntanglementValue(MeasureKind.LOG_NEGATIVITY, _clamp(raw))


def measure(state, kind: MeasureKind) -> float:
    kind = MeasureKind(kind)
    if kind is MeasureKind.ENTROPY:
        return half_chain_entropy(state).value
    return log_negativity(state).value


def _schmidt_values(vectors: np.ndarray, L: int) -> np.ndarray:
    dA, dB = _half_dims(L)
    mats = np.asarray(vectors).T.reshape(-1, dA, dB)
    return np.linalg.svd(mats, compute_uv=False)


def pure_entropies(vectors: np.ndarray, L: int) -> np.ndarray:
    """Half-chain entropies of every column of ``vectors`` (shape ``(2**L, K)``)."""
    s = _schmidt_values(vectors, L)
    return np.maximum(_entropy_from_probs(s**2), 0.0)


def pure_log_negativities(vectors: np.ndarray, L: int) -> np.ndarray:
    """Log-negativities of pure states, ``2 log2(sum of Schmidt coefficients)``."""
    s = _schmidt_values(vectors, L)
    raw = 2 * np.log2(np.sum(s, axis=-1))
    if np.any(raw < -CLAMP_TOL):
        raise CorruptedStateError("negative log-negativity beyond tolerance")
    return np.maximum(raw, 0.0)


def pure_measures(vectors: np.ndarray, L: int, kind: MeasureKind) -> np.ndarray:
    if MeasureKind(kind) is MeasureKind.ENTROPY:
        return pure_entropies(vectors, L)
    return pure_log_negativities(vectors, L)
