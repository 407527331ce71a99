"""Statistical images: outcome probabilities after a fixed set of random local rotations."""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hilbert import (
    DensityMatrix,
    PureState,
    apply_local_unitaries,
    conjugate_by_local_unitaries,
    rotated_diagonal,
)

DEFAULT_W = 5
ROTATION_MAGIC = b"QERR"
ROTATION_VERSION = 1


class FormatError(ValueError):
    """A binary file failed its magic, version, size or checksum check."""


def haar_unitaries(rng: np.random.Generator, shape=()) -> np.ndarray:
    """Haar-random 2x2 unitaries with the given batch shape.

    QR of a complex Ginibre matrix, with the phases of R's diagonal moved
    onto Q so that the result is exactly Haar distributed.
    """
    z = (rng.standard_normal(shape + (2, 2)) + 1j * rng.standard_normal(shape + (2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


@dataclass(frozen=True, eq=False)
class RotationSet:
    """``W`` product rotations ``U_i = u_{i,1} x ... x u_{i,L}``; ``locals[i, l]`` is a 2x2 unitary."""

    locals: np.ndarray
    rng_seed: int | None = None

    def __post_init__(self):
        u = np.asarray(self.locals, dtype=complex)
        if u.ndim != 4 or u.shape[2:] != (2, 2):
            raise ValueError("rotation array must have shape (W, L, 2, 2)")
        err = np.abs(np.swapaxes(u.conj(), -1, -2) @ u - np.eye(2)).max()
        if err > 1e-12:
            raise ValueError(f"rotation entries are not unitary (error {err:.1e})")
        object.__setattr__(self, "locals", u)

    @property
    def W(self) -> int:
        return self.locals.shape[0]

    @property
    def L(self) -> int:
        return self.locals.shape[1]


def sample_cue_rotations(W: int, L: int, rng_seed=None) -> RotationSet:
    if W < 1 or L < 1:
        raise ValueError("W and L must be positive")
    rng = np.random.default_rng(rng_seed)
    seed = rng_seed if isinstance(rng_seed, (int, np.integer)) else None
    return RotationSet(haar_unitaries(rng, (W, L)), seed)


@dataclass(frozen=True, eq=False)
class StatImage:
    """``probs[i, j]``: probability of configuration ``j`` after rotation ``i``."""

    probs: np.ndarray
    exact: bool = True
    shots_M: int = 0

    @property
    def W(self) -> int:
        return self.probs.shape[0]

    @property
    def D(self) -> int:
        return self.probs.shape[1]


def image_probs(state, rotations: RotationSet, pre_rotation=None) -> np.ndarray:
    """Exact ``(W, D)`` image; ``pre_rotation`` (L local unitaries) acts on the state first."""
    if state.L != rotations.L:
        raise ValueError(f"state has L={state.L} but rotations were drawn for L={rotations.L}")
    L = state.L
    locals_ = rotations.locals if pre_rotation is None else rotations.locals @ np.asarray(pre_rotation)
    if isinstance(state, PureState):
        rows = [np.abs(apply_local_unitaries(us, state.amps, L)) ** 2 for us in locals_]
    else:
        rows = [np.real(rotated_diagonal(us, state.mat, L)) for us in locals_]
    return np.clip(np.array(rows), 0.0, None)


def generate_image(state: PureState | DensityMatrix, rotations: RotationSet) -> StatImage:
    return StatImage(image_probs(state, rotations))


def images_of_pure_states(vectors: np.ndarray, L: int, rotations: RotationSet) -> np.ndarray:
    """Exact images of every column of ``vectors``; returns shape ``(K, W, 2**L)``."""
    if L != rotations.L:
        raise ValueError("rotation set does not match chain length")
    out = np.empty((vectors.shape[1], rotations.W, 2**L))
    for i, us in enumerate(rotations.locals):
        out[:, i, :] = (np.abs(apply_local_unitaries(us, vectors, L)) ** 2).T
    return out


def apply_shot_noise(image: StatImage, M: int, rng_seed=None) -> StatImage:
    """Replace each row by the empirical frequencies of ``M`` sampled configurations."""
    if not image.exact:
        raise ValueError("shot noise must be applied to an exact image")
    if M < 1:
        raise ValueError("M must be at least 1")
    rng = np.random.default_rng(rng_seed)
    return StatImage(sample_frequencies(image.probs, M, rng), exact=False, shots_M=int(M))


def sample_frequencies(probs: np.ndarray, M: int, rng: np.random.Generator) -> np.ndarray:
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    p = p / p.sum(axis=-1, keepdims=True)
    return rng.multinomial(M, p) / M


def randomize_orientation(state, rng_seed=None):
    """Apply an independent Haar-random rotation on every site."""
    rng = np.random.default_rng(rng_seed)
    us = haar_unitaries(rng, (state.L,))
    if isinstance(state, PureState):
        return PureState(state.L, apply_local_unitaries(us, state.amps, state.L))
    return DensityMatrix(state.L, conjugate_by_local_unitaries(us, state.mat, state.L))


# --- rotation files ------------------------------------------------------------


def save_rotations(rotations: RotationSet, path) -> None:
    """Write magic, version, W, L, seed, complex128 entries and a CRC32 trailer."""
    seed = -1 if rotations.rng_seed is None else int(rotations.rng_seed)
    body = ROTATION_MAGIC + struct.pack("<IIIq", ROTATION_VERSION, rotations.W, rotations.L, seed)
    body += rotations.locals.astype("<c16").tobytes()
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def load_rotations(path) -> RotationSet:
    data = Path(path).read_bytes()
    if len(data) < 28 or data[:4] != ROTATION_MAGIC:
        raise FormatError(f"{path} is not a rotation file")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise FormatError(f"checksum mismatch in {path}")
    version, W, L, seed = struct.unpack("<IIIq", body[4:24])
    if version != ROTATION_VERSION:
        raise FormatError(f"unsupported rotation file version {version}")
    payload = body[24:]
    if len(payload) != W * L * 4 * 16:
        raise FormatError("rotation payload size does not match header")
    locals_ = np.frombuffer(payload, dtype="<c16").reshape(W, L, 2, 2).astype(complex)
    return RotationSet(locals_, None if seed < 0 else seed)
