"""Labelled image libraries: binning, the training-set recipes, and the on-disk format."""
from __future__ import annotations

import json
import logging
import math
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hilbert import (
    PureState,
    apply_local_unitaries,
    random_product_state,
    random_separable_mixed,
)
from .imaging import FormatError, RotationSet, StatImage, haar_unitaries, image_probs, images_of_pure_states
from .measures import MeasureKind, measure, pure_measures
from .models import (
    LindbladConfig,
    ModelKind,
    ModelSpec,
    build_hamiltonian,
    diagonalize,
    ground_state,
    lindblad_trajectory,
)

log = logging.getLogger(__name__)

LIBRARY_MAGIC = b"QERL"
LIBRARY_VERSION = 1
MANIFEST_NAME = "manifest.json"
BLOB_NAME = "library.qerl"
EDGE_TOL = 1e-12

GROUND_H_MAX = 50.0
EXCITED_H_RANGE = (1.0, 1.07)
DISSIPATION_GAMMA = 0.1
ALPHA_MAX_RANGE = (2, 20)


class UnreachableBinError(RuntimeError):
    """No state of the requested family has a measure value inside a bin."""


class VersionSkewError(FormatError):
    pass


@dataclass(frozen=True)
class BinningScheme:
    """``n_bins`` equal intervals ``[(n-1) w, n w)`` covering ``[0, e_max]``; the last bin is closed."""

    measure_kind: MeasureKind
    e_max: float
    n_bins: int

    def __post_init__(self):
        object.__setattr__(self, "measure_kind", MeasureKind(self.measure_kind))
        if not self.e_max > 0:
            raise ValueError("e_max must be positive")
        if self.n_bins < 2:
            raise ValueError("need at least two bins")

    @property
    def width(self) -> float:
        return self.e_max / self.n_bins

    def midpoint(self, n):
        return (np.asarray(n) - 0.5) * self.width

    def to_dict(self) -> dict:
        return {"measure_kind": self.measure_kind.value, "e_max": self.e_max, "n_bins": self.n_bins}

    @classmethod
    def from_dict(cls, d) -> BinningScheme:
        return cls(MeasureKind(d["measure_kind"]), float(d["e_max"]), int(d["n_bins"]))


def entropy_scheme(n_bins: int, e_max: float = math.log(2)) -> BinningScheme:
    return BinningScheme(MeasureKind.ENTROPY, e_max, n_bins)


def dynamics_scheme(kind: MeasureKind, L: int, n_bins: int) -> BinningScheme:
    """Scheme spanning the largest possible half-chain value: ``(L/2) ln 2`` nats or ``L/2`` bits."""
    kind = MeasureKind(kind)
    e_max = (L // 2) * math.log(2) if kind is MeasureKind.ENTROPY else L / 2
    return BinningScheme(kind, e_max, n_bins)


def bin_labels(values, scheme: BinningScheme) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if np.any(v < 0):
        raise ValueError("entanglement values must be non-negative")
    if np.any(v > scheme.e_max + EDGE_TOL):
        raise ValueError(f"value above e_max={scheme.e_max}; the binning scheme does not cover the data")
    return np.minimum(np.floor(v / scheme.width).astype(np.int64) + 1, scheme.n_bins)


def bin_label(value: float, scheme: BinningScheme) -> int:
    return int(bin_labels([value], scheme)[0])


@dataclass(frozen=True, eq=False)
class LabeledImage:
    image: StatImage
    exact_value: float
    bin: int
    provenance: dict


@dataclass(eq=False)
class Library:
    """A stack of labelled images sharing one rotation set and binning scheme.

    ``images`` has shape ``(N, W, D)`` and is kept in float32, the storage
    precision, so a write/read round trip is exact.
    """

    images: np.ndarray
    values: np.ndarray
    bins: np.ndarray
    scheme: BinningScheme
    provenance: dict[str, list] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float32)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.bins = np.asarray(self.bins, dtype=np.int64)
        n = len(self.images)
        if self.images.ndim != 3 or len(self.values) != n or len(self.bins) != n:
            raise ValueError("images, values and bins must agree in length")
        for key, col in self.provenance.items():
            if len(col) != n:
                raise ValueError(f"provenance column {key!r} has the wrong length")

    def __len__(self):
        return len(self.images)

    def __getitem__(self, i) -> LabeledImage:
        prov = {k: v[i] for k, v in self.provenance.items()}
        return LabeledImage(StatImage(self.images[i]), float(self.values[i]), int(self.bins[i]), prov)

    @property
    def W(self) -> int:
        return self.images.shape[1]

    @property
    def D(self) -> int:
        return self.images.shape[2]

    def class_counts(self) -> dict[str, int]:
        classes = self.provenance.get("state_class", [])
        return {c: classes.count(c) for c in sorted(set(classes))}

    def subset(self, idx) -> Library:
        idx = np.asarray(idx)
        prov = {k: [v[i] for i in idx] for k, v in self.provenance.items()}
        return Library(self.images[idx], self.values[idx], self.bins[idx], self.scheme, prov, dict(self.meta))

    def relabel(self, scheme: BinningScheme) -> Library:
        if scheme.measure_kind is not self.scheme.measure_kind:
            raise ValueError("cannot relabel across measure kinds")
        return Library(self.images, self.values, bin_labels(self.values, scheme), scheme,
                       self.provenance, dict(self.meta))


def concatenate(libraries: list[Library], meta: dict | None = None) -> Library:
    scheme = libraries[0].scheme
    if any(lib.scheme != scheme for lib in libraries):
        raise ValueError("libraries use different binning schemes")
    keys = sorted(set().union(*(lib.provenance for lib in libraries)))
    prov = {k: [x for lib in libraries for x in lib.provenance.get(k, [None] * len(lib))] for k in keys}
    return Library(
        np.concatenate([lib.images for lib in libraries]),
        np.concatenate([lib.values for lib in libraries]),
        np.concatenate([lib.bins for lib in libraries]),
        scheme,
        prov,
        meta if meta is not None else dict(libraries[0].meta),
    )


class _Collector:
    def __init__(self, scheme: BinningScheme):
        self.scheme = scheme
        self.images, self.values, self.prov = [], [], {"state_class": [], "model": [], "h": [], "t": []}

    def add(self, images, values, state_class, model=None, h=None, t=None):
        images = np.asarray(images)
        values = np.atleast_1d(np.asarray(values, dtype=float))
        self.images.append(images.reshape((-1,) + images.shape[-2:]))
        self.values.append(values)
        for _ in range(len(values)):
            self.prov["state_class"].append(state_class)
            self.prov["model"].append(model)
            self.prov["h"].append(None if h is None else float(h))
            self.prov["t"].append(None if t is None else float(t))

    def __len__(self):
        return sum(len(v) for v in self.values)

    def build(self, meta) -> Library:
        if not self.values:
            raise ValueError("no images were produced")
        values = np.concatenate(self.values)
        images = np.concatenate(self.images)
        return Library(images, values, bin_labels(values, self.scheme), self.scheme, self.prov, meta)


def _base_meta(recipe, rotations: RotationSet, scheme, seed, pbc, **extra) -> dict:
    meta = {
        "recipe": recipe,
        "L": rotations.L,
        "W": rotations.W,
        "rotation_seed": rotations.rng_seed,
        "seed": seed if isinstance(seed, (int, type(None))) else None,
        "boundary": "periodic" if pbc else "open",
        "scheme": scheme.to_dict(),
    }
    meta.update(extra)
    return meta


def _rotate_pure(rng, vectors, L):
    """Independent Haar product rotation for each column."""
    out = np.empty_like(vectors)
    for k in range(vectors.shape[1]):
        out[:, k] = apply_local_unitaries(haar_unitaries(rng, (L,)), vectors[:, k], L)
    return out


# --- ground states -----------------------------------------------------------------


class _GroundTable:
    """Monotone lookup of the ground-state measure against h on ``(1, h_max]``."""

    def __init__(self, kind, L, measure_kind, pbc, h_max=GROUND_H_MAX, points=400):
        self.kind, self.L, self.measure_kind, self.pbc = ModelKind(kind), L, MeasureKind(measure_kind), pbc
        self.h = 1.0 + np.geomspace(1e-4, h_max - 1.0, points)
        self.v = np.array([self.evaluate(h)[0] for h in self.h])
        # interpolation needs a decreasing table; the physical curves are monotone already
        self.v_mono = np.minimum.accumulate(self.v)

    def evaluate(self, h):
        _, psi = ground_state(ModelSpec(self.kind, self.L, h, pbc=self.pbc))
        return float(pure_measures(psi.amps[:, None], self.L, self.measure_kind)[0]), psi

    @property
    def range(self):
        return float(self.v_mono[-1]), float(self.v_mono[0])

    def h_for(self, target):
        return float(np.interp(target, self.v_mono[::-1], self.h[::-1]))


def _ground_states_in(table, rng, lo, hi, n, label_check=None, max_tries=50):
    """Draw ``n`` ground states whose measure is uniform on ``[lo, hi)`` (clipped to what is reachable)."""
    vmin, vmax = table.range
    a, b = max(lo, vmin), min(hi, vmax)
    if n and not a < b:
        raise UnreachableBinError(
            f"{table.kind.value} ground states span [{vmin:.4f}, {vmax:.4f}], which misses [{lo:.4f}, {hi:.4f})")
    out = []
    for _ in range(n):
        for _attempt in range(max_tries):
            h = table.h_for(rng.uniform(a, b))
            value, psi = table.evaluate(h)
            if label_check is None or label_check(value):
                out.append((h, value, psi))
                break
        else:
            raise UnreachableBinError(f"could not land a ground state in [{lo:.4f}, {hi:.4f})")
    return out


def _emit_ground(col, draws, kind, rng, rotations):
    L = rotations.L
    vecs = np.stack([psi.amps for _, _, psi in draws], axis=1)
    imgs = images_of_pure_states(_rotate_pure(rng, vecs, L), L, rotations)
    for (h, value, _), img in zip(draws, imgs):
        col.add(img, value, "ground", ModelKind(kind).value, h)


def build_ground_library(kind, scheme: BinningScheme, count: int, rotations: RotationSet, rng_seed=None,
                         pbc: bool = True, h_max: float = GROUND_H_MAX) -> Library:
    """Ground states at fields h > 1 with a flat histogram over the scheme's bins.

    For each bin, target values are drawn uniformly inside the bin, h is found
    from a monotone measure-vs-h table and the candidate is kept only if its
    recomputed value lands in the bin. Every state gets a random product
    rotation before imaging.
    """
    kind = ModelKind(kind)
    if kind not in (ModelKind.TFI_PLUS, ModelKind.TFI_MINUS, ModelKind.XX):
        raise ValueError(f"no ground-state recipe for {kind.value}")
    rng = np.random.default_rng(rng_seed)
    table = _GroundTable(kind, rotations.L, scheme.measure_kind, pbc, h_max)
    col = _Collector(scheme)
    per_bin = [count // scheme.n_bins + (1 if n < count % scheme.n_bins else 0) for n in range(scheme.n_bins)]
    for n, k in enumerate(per_bin, start=1):
        lo, hi = (n - 1) * scheme.width, n * scheme.width
        draws = _ground_states_in(table, rng, lo, hi, k, lambda v, n=n: bin_label(v, scheme) == n)
        _emit_ground(col, draws, kind, rng, rotations)
    meta = _base_meta("ground", rotations, scheme, rng_seed, pbc, model=kind.value, count=count,
                      h_range=[1.0, h_max], measure_range=list(table.range))
    return col.build(meta)


def _ground_uniform(col, kind, scheme, n, rotations, rng, pbc):
    """Ground states spread uniformly over their reachable measure range (no per-bin quota)."""
    if n == 0:
        return
    table = _GroundTable(kind, rotations.L, scheme.measure_kind, pbc)
    lo, hi = table.range
    _emit_ground(col, _ground_states_in(table, rng, lo, min(hi, scheme.e_max), n), kind, rng, rotations)


# --- excited states ---------------------------------------------------------------


def _per_h_picks(values, n_bins, rng):
    """One random index from each of ``n_bins`` equal bins between min and max of ``values``."""
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 0:
        return [int(rng.integers(len(values)))]
    idx = np.minimum(((values - lo) / (hi - lo) * n_bins).astype(int), n_bins - 1)
    picks = []
    for b in range(n_bins):
        members = np.flatnonzero(idx == b)
        if len(members) == 0:
            log.info("empty per-h bin %d of %d; skipped", b + 1, n_bins)
            continue
        picks.append(int(rng.choice(members)))
    return picks


def _excited_selection(kind, L, measure_kind, n_bins, h, rng, pbc):
    spec = ModelSpec(kind, L, h, pbc=pbc)
    vectors = diagonalize(build_hamiltonian(spec)).vectors
    values = pure_measures(vectors, L, measure_kind)
    picks = _per_h_picks(values, n_bins, rng)
    return vectors[:, picks], values[picks]


def _excited_into(col, kind, scheme, count, rotations, rng, pbc, h_values=None, h_range=EXCITED_H_RANGE):
    L = rotations.L
    i = 0
    while len(col) < count:
        if h_values is not None:
            if i >= len(h_values):
                break
            h = float(h_values[i])
        else:
            h = float(rng.uniform(*h_range))
            while h <= h_range[0]:
                h = float(rng.uniform(*h_range))
        i += 1
        vecs, vals = _excited_selection(kind, L, scheme.measure_kind, scheme.n_bins, h, rng, pbc)
        take = min(len(vals), count - len(col))
        vecs, vals = vecs[:, :take], vals[:take]
        imgs = images_of_pure_states(_rotate_pure(rng, vecs, L), L, rotations)
        for img, v in zip(imgs, vals):
            col.add(img, v, "excited", ModelKind(kind).value, h)
    return i


def build_excited_library(kind, scheme: BinningScheme, count: int, rotations: RotationSet, rng_seed=None,
                          h_values=None, pbc: bool = True) -> Library:
    """Eigenstates near the critical field, at most ``n_bins`` per h value.

    At each h the full spectrum is split into ``n_bins`` equal bins between
    its smallest and largest measure value and one eigenstate is drawn from
    each. Labels use the global ``scheme``. Fields are drawn uniformly from
    (1, 1.07) unless ``h_values`` is given.
    """
    kind = ModelKind(kind)
    if kind not in (ModelKind.TFI_PLUS, ModelKind.NI_TFI_PLUS):
        raise ValueError(f"no excited-state recipe for {kind.value}")
    rng = np.random.default_rng(rng_seed)
    col = _Collector(scheme)
    n_h = _excited_into(col, kind, scheme, count, rotations, rng, pbc, h_values)
    meta = _base_meta("excited", rotations, scheme, rng_seed, pbc, model=kind.value, count=len(col),
                      h_points=n_h, h_range=list(EXCITED_H_RANGE))
    return col.build(meta)


# --- dynamics libraries ----------------------------------------------------------


def _product_into(col, n, rotations, rng, scheme):
    L = rotations.L
    for _ in range(n):
        psi = random_product_state(L, rng)
        value = float(pure_measures(psi.amps[:, None], L, scheme.measure_kind)[0])
        col.add(images_of_pure_states(psi.amps[:, None], L, rotations), value, "product")


def build_unitary_dynamics_library(scheme: BinningScheme, counts, rotations: RotationSet, rng_seed=None,
                                   pbc: bool = True) -> Library:
    """TFI+ ground states, TFI+ excited states and random product states.

    ``counts`` is ``(n_ground, n_excited, n_product)``; the recipe uses equal
    thirds. Ground states are spread uniformly over their reachable entropy
    range and labelled with ``scheme``.
    """
    if scheme.measure_kind is not MeasureKind.ENTROPY:
        raise ValueError("the unitary-dynamics library is labelled by entropy")
    n_ground, n_excited, n_product = counts
    rng = np.random.default_rng(rng_seed)
    parts = []
    col = _Collector(scheme)
    _ground_uniform(col, ModelKind.TFI_PLUS, scheme, n_ground, rotations, rng, pbc)
    parts.append(col)
    col = _Collector(scheme)
    n_h = _excited_into(col, ModelKind.TFI_PLUS, scheme, n_excited, rotations, rng, pbc)
    parts.append(col)
    col = _Collector(scheme)
    _product_into(col, n_product, rotations, rng, scheme)
    parts.append(col)
    meta = _base_meta("dynamics", rotations, scheme, rng_seed, pbc, model=ModelKind.TFI_PLUS.value,
                      counts={"ground": n_ground, "excited": n_excited, "product": n_product}, h_points=n_h)
    return concatenate([c.build(meta) for c in parts if len(c)], meta)


def _dissipated_snapshots(psi: PureState, n_bins: int, gamma: float, rng, grid_points=24):
    """Snapshots of a dephasing trajectory, one per log-negativity bin between its max and min."""
    cfg = LindbladConfig(gamma, include_hamiltonian=False, method="split")
    spec = None
    times = np.concatenate([[0.0], np.geomspace(0.01 / gamma, 20.0 / gamma, grid_points - 1)])
    rho0 = psi.to_density()
    states = lindblad_trajectory(rho0, spec, cfg, times)
    vals = np.array([measure(s, MeasureKind.LOG_NEGATIVITY) for s in states])
    hi, lo = float(vals.max()), float(vals.min())
    if hi - lo <= 1e-12:
        return [(0.0, float(vals[0]), states[0])]

    def at(t):
        s = lindblad_trajectory(rho0, spec, cfg, [t])[0]
        return measure(s, MeasureKind.LOG_NEGATIVITY), s

    width = (hi - lo) / n_bins
    idx = np.minimum(((vals - lo) / width).astype(int), n_bins - 1)
    out = []
    for b in range(n_bins):
        members = np.flatnonzero(idx == b)
        if len(members):
            k = int(rng.choice(members))
            out.append((float(times[k]), float(vals[k]), states[k]))
            continue
        # no grid sample in this bin: bisect in time for a value drawn inside it
        target = lo + (b + rng.uniform()) * width
        above = np.flatnonzero(vals >= target)
        if len(above) == 0 or above[-1] + 1 >= len(times):
            log.info("trajectory never reaches log-negativity bin %d; skipped", b + 1)
            continue
        t_a, t_b = times[above[-1]], times[above[-1] + 1]
        found = None
        for _ in range(40):
            t_mid = 0.5 * (t_a + t_b)
            v, s = at(t_mid)
            if min(int((v - lo) / width), n_bins - 1) == b:
                found = (float(t_mid), float(v), s)
                break
            if v > target:
                t_a = t_mid
            else:
                t_b = t_mid
        if found is None:
            log.info("bisection missed log-negativity bin %d; skipped", b + 1)
        else:
            out.append(found)
    return out


def build_dissipative_library(scheme: BinningScheme, counts, rotations: RotationSet, rng_seed=None,
                              gamma: float = DISSIPATION_GAMMA, pbc: bool = True) -> Library:
    """TFI+ eigenstates, separable mixed states and dephased TFI+ eigenstates.

    ``counts`` is ``(n_ground, n_excited, n_separable, n_dissipated)``; the
    recipe's proportions are 1:1:1:2. For each field value the excited-state
    selection is repeated and every selected eigenstate is evolved under the
    sigma^x dephasing alone; its log-negativity range along the trajectory is
    split into ``n_bins`` bins and one snapshot is kept per bin.
    """
    if scheme.measure_kind is not MeasureKind.LOG_NEGATIVITY:
        raise ValueError("the dissipative library is labelled by log-negativity")
    n_ground, n_excited, n_sep, n_diss = counts
    L = rotations.L
    rng = np.random.default_rng(rng_seed)
    parts = []

    col = _Collector(scheme)
    _ground_uniform(col, ModelKind.TFI_PLUS, scheme, n_ground, rotations, rng, pbc)
    parts.append(col)
    col = _Collector(scheme)
    _excited_into(col, ModelKind.TFI_PLUS, scheme, n_excited, rotations, rng, pbc)
    parts.append(col)

    col = _Collector(scheme)
    for _ in range(n_sep):
        alpha_max = int(rng.integers(ALPHA_MAX_RANGE[0], ALPHA_MAX_RANGE[1] + 1))
        rho = random_separable_mixed(L, alpha_max, rng)
        col.add(image_probs(rho, rotations), measure(rho, MeasureKind.LOG_NEGATIVITY), "separable")
    parts.append(col)

    col = _Collector(scheme)
    n_h = 0
    while len(col) < n_diss:
        h = float(rng.uniform(*EXCITED_H_RANGE))
        n_h += 1
        vecs, _ = _excited_selection(ModelKind.TFI_PLUS, L, scheme.measure_kind, scheme.n_bins, h, rng, pbc)
        for k in range(vecs.shape[1]):
            psi = PureState(L, vecs[:, k])
            for t, value, rho in _dissipated_snapshots(psi, scheme.n_bins, gamma, rng):
                if len(col) >= n_diss:
                    break
                us = haar_unitaries(rng, (L,))
                col.add(image_probs(rho, rotations, pre_rotation=us), value, "dissipated", ModelKind.TFI_PLUS.value, h, t)
            if len(col) >= n_diss:
                break
    parts.append(col)
    meta = _base_meta("dissipative", rotations, scheme, rng_seed, pbc, model=ModelKind.TFI_PLUS.value,
                      counts={"ground": n_ground, "excited": n_excited, "separable": n_sep, "dissipated": n_diss},
                      gamma=gamma, h_points_dissipated=n_h)
    return concatenate([c.build(meta) for c in parts if len(c)], meta)


# --- file format -----------------------------------------------------------------


def _blob(lib: Library) -> bytes:
    n, W, D = lib.images.shape
    body = LIBRARY_MAGIC + struct.pack("<IIII", LIBRARY_VERSION, n, W, D)
    body += lib.images.astype("<f4").tobytes()
    body += lib.values.astype("<f8").tobytes()
    body += lib.bins.astype("<u2").tobytes()
    return body + struct.pack("<I", zlib.crc32(body))


def write_library(lib: Library, path) -> Path:
    """Write ``manifest.json`` and ``library.qerl`` into the directory ``path``."""
    if len(lib) == 0:
        raise ValueError("refusing to write an empty library")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    blob = _blob(lib)
    manifest = dict(lib.meta)
    manifest.update(
        format_version=LIBRARY_VERSION,
        count=len(lib),
        W=lib.W,
        D=lib.D,
        scheme=lib.scheme.to_dict(),
        class_counts=lib.class_counts(),
        blob=BLOB_NAME,
        blob_crc32=zlib.crc32(blob),
        provenance=lib.provenance,
    )
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    (out / BLOB_NAME).write_bytes(blob)
    return out


def read_library(path) -> Library:
    src = Path(path)
    manifest = json.loads((src / MANIFEST_NAME).read_text(encoding="utf-8"))
    data = (src / manifest.get("blob", BLOB_NAME)).read_bytes()
    if len(data) < 24 or data[:4] != LIBRARY_MAGIC:
        raise FormatError(f"{src} does not hold a library blob")
    version, n, W, D = struct.unpack("<IIII", data[4:20])
    expected = 20 + n * W * D * 4 + n * 8 + n * 2 + 4
    if len(data) != expected:
        raise FormatError(f"library blob is truncated or padded ({len(data)} bytes, expected {expected})")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise FormatError("library checksum mismatch")
    if version != LIBRARY_VERSION or manifest.get("format_version") != LIBRARY_VERSION:
        raise VersionSkewError(f"library format version {version} / manifest {manifest.get('format_version')}")
    if (manifest.get("count"), manifest.get("W"), manifest.get("D")) != (n, W, D):
        raise VersionSkewError("manifest extents disagree with the blob header")
    off = 20
    images = np.frombuffer(body, dtype="<f4", count=n * W * D, offset=off).reshape(n, W, D)
    off += n * W * D * 4
    values = np.frombuffer(body, dtype="<f8", count=n, offset=off)
    off += n * 8
    bins = np.frombuffer(body, dtype="<u2", count=n, offset=off)
    prov = manifest.pop("provenance", {})
    scheme = BinningScheme.from_dict(manifest["scheme"])
    meta = {k: v for k, v in manifest.items()
            if k not in ("format_version", "count", "W", "D", "class_counts", "blob", "blob_crc32")}
    return Library(images.astype(np.float32), values.astype(np.float64), bins.astype(np.int64), scheme, prov, meta)
