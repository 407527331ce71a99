"""Evaluation of trained networks: binning-error statistics, train/test grids, N_bin sweeps
and entanglement dynamics under finite-shot noise."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cnn
from .hilbert import PureState, random_product_state
from .imaging import RotationSet, image_probs, images_of_pure_states, sample_frequencies
from .library import BinningScheme, Library, bin_labels, build_ground_library, entropy_scheme
from .measures import MeasureKind, measure, pure_measures
from .models import LindbladConfig, ModelKind, ModelSpec, build_hamiltonian, diagonalize, evolve_unitary_times, lindblad_trajectory

log = logging.getLogger(__name__)

DEFAULT_SHOTS = (10_000, 3000, 1000)
DEFAULT_ENSEMBLE = 100
DYNAMICS_H = 1.05
SPLIT_DT = 0.5


def default_time_grid(n: int = 60, t_min: float = 0.1, t_max: float = 1e3) -> np.ndarray:
    return np.geomspace(t_min, t_max, n)


@dataclass
class ErrorStats:
    """Distribution of ``delta = n - n_ANN`` and moments of ``delta / N_bin``.

    ``delta / N_bin`` equals ``delta E / E_max`` because every bin has width
    ``E_max / N_bin``.
    """

    n_bins: int
    histogram: dict[int, int]
    mu: float
    sigma: float

    @property
    def count(self) -> int:
        return sum(self.histogram.values())

    def probability(self, delta: int) -> float:
        return self.histogram.get(delta, 0) / self.count

    def within(self, k: int) -> float:
        return sum(c for d, c in self.histogram.items() if abs(d) <= k) / self.count

    @property
    def mean_delta(self) -> float:
        return sum(d * c for d, c in self.histogram.items()) / self.count

    def mode(self) -> int:
        return max(self.histogram, key=lambda d: (self.histogram[d], -abs(d)))


def error_stats(true_bins, predicted_bins, n_bins: int) -> ErrorStats:
    true_bins, predicted_bins = np.asarray(true_bins), np.asarray(predicted_bins)
    if true_bins.shape != predicted_bins.shape or true_bins.size == 0:
        raise ValueError("need equally long, non-empty label arrays")
    delta = true_bins - predicted_bins
    hist = {d: int(np.sum(delta == d)) for d in range(-(n_bins - 1), n_bins)}
    scaled = delta / n_bins
    return ErrorStats(n_bins, hist, float(scaled.mean()), float(scaled.std()))


def stats_from_histogram(histogram: dict[int, int], n_bins: int) -> tuple[float, float]:
    """``(mu, sigma)`` of ``delta / N_bin`` recomputed in one pass over a histogram."""
    n = s1 = s2 = 0.0
    for d, c in histogram.items():
        x = d / n_bins
        n += c
        s1 += c * x
        s2 += c * x * x
    mu = s1 / n
    return mu, float(np.sqrt(max(s2 / n - mu * mu, 0.0)))


def _check_compatible(params: cnn.NetworkParams, lib: Library):
    if params.config.n_outputs != lib.scheme.n_bins:
        raise ValueError(f"network has {params.config.n_outputs} outputs, library uses {lib.scheme.n_bins} bins")
    if params.config.input_shape != (lib.W, lib.D):
        raise ValueError("network input shape does not match the library images")


def evaluate(params: cnn.NetworkParams, test_library: Library) -> ErrorStats:
    _check_compatible(params, test_library)
    pred = cnn.predict_bins_batched(params, test_library.images)
    return error_stats(test_library.bins, pred, test_library.scheme.n_bins)


def train_on_library(library: Library, train_cfg: cnn.TrainConfig = cnn.TrainConfig(), init_seed: int = 0,
                     **net_kwargs) -> tuple[cnn.NetworkParams, cnn.TrainingLog]:
    config = cnn.NetworkConfig((library.W, library.D), library.scheme.n_bins, **net_kwargs)
    params = cnn.init_params(config, init_seed)
    return cnn.train(params, library.images, library.bins, train_cfg)


@dataclass
class GridResult:
    kinds: list[str]
    stats: dict[tuple[str, str], ErrorStats]
    logs: dict[str, cnn.TrainingLog] = field(default_factory=dict)

    def sigma_matrix(self) -> np.ndarray:
        return np.array([[self.stats[a, b].sigma for b in self.kinds] for a in self.kinds])

    def mu_matrix(self) -> np.ndarray:
        return np.array([[self.stats[a, b].mu for b in self.kinds] for a in self.kinds])


def cross_model_grid(libraries: dict, train_cfg: cnn.TrainConfig = cnn.TrainConfig(), init_seed: int = 0,
                     **net_kwargs) -> GridResult:
    """Train one network per model class and test it on every class.

    ``libraries`` maps a model name to ``(train_library, test_library)``;
    all libraries must share one binning scheme.
    """
    kinds = list(libraries)
    schemes = {lib.scheme for pair in libraries.values() for lib in pair}
    if len(schemes) != 1:
        raise ValueError("grid libraries must share one binning scheme")
    stats, logs = {}, {}
    for a in kinds:
        params, logs[a] = train_on_library(libraries[a][0], train_cfg, init_seed, **net_kwargs)
        for b in kinds:
            stats[a, b] = evaluate(params, libraries[b][1])
    return GridResult(kinds, stats, logs)


def nbin_sweep(kind, nbin_range, rotations: RotationSet, n_train: int, n_test: int,
               train_cfg: cnn.TrainConfig = cnn.TrainConfig(), seed: int = 0, **net_kwargs) -> list[tuple[int, ErrorStats]]:
    """Ground-state train/test runs for each N_bin; returns ``[(n_bins, stats), ...]``."""
    out = []
    for nb in nbin_range:
        if not 2 <= nb <= 10:
            raise ValueError("N_bin outside 2..10")
        scheme = entropy_scheme(nb)
        train_lib = build_ground_library(kind, scheme, n_train, rotations, [seed, nb, 0])
        test_lib = build_ground_library(kind, scheme, n_test, rotations, [seed, nb, 1])
        params, _ = train_on_library(train_lib, train_cfg, seed, **net_kwargs)
        out.append((nb, evaluate(params, test_lib)))
    return out


# --- dynamics -------------------------------------------------------------------


@dataclass
class DynamicsEval:
    """Exact and predicted entanglement along an ensemble of trajectories.

    ``exact[e, k]`` is the exact measure of member ``e`` at ``times[k]``;
    ``predicted[M][e, k]`` the network's bin for shot level ``M`` (0 means
    exact probabilities).
    """

    times: np.ndarray
    scheme: BinningScheme
    exact: np.ndarray
    predicted: dict[int, np.ndarray]
    gamma: float = 0.0

    @property
    def ensemble_n(self) -> int:
        return self.exact.shape[0]

    @property
    def shot_levels(self) -> list[int]:
        return sorted(self.predicted)

    @property
    def exact_bins(self) -> np.ndarray:
        return bin_labels(self.exact, self.scheme)

    def delta(self, M: int = 0) -> np.ndarray:
        return self.exact_bins - self.predicted[M]

    def mu(self, M: int = 0) -> np.ndarray:
        return (self.delta(M) / self.scheme.n_bins).mean(axis=0)

    def sigma(self, M: int = 0) -> np.ndarray:
        return (self.delta(M) / self.scheme.n_bins).std(axis=0)

    def predicted_mid(self, M: int = 0) -> np.ndarray:
        return self.scheme.midpoint(self.predicted[M]).mean(axis=0)

    def mean_abs_delta(self, M: int = 0) -> float:
        return float(np.abs(self.delta(M)).mean())

    def member_abs_delta(self, M: int = 0) -> np.ndarray:
        return np.abs(self.delta(M)).mean(axis=1)


def random_product_ensemble(L: int, n: int, rng_seed=None) -> list[PureState]:
    rng = np.random.default_rng(rng_seed)
    return [random_product_state(L, rng) for _ in range(n)]


def exact_trajectory(state: PureState, spec: ModelSpec, times, lindblad: LindbladConfig | None = None):
    """States along the exact evolution: amplitudes ``(T, D)`` when unitary, density matrices otherwise."""
    if lindblad is None or lindblad.gamma == 0:
        spectrum = diagonalize(build_hamiltonian(spec))
        return evolve_unitary_times(state, spectrum, times)
    return lindblad_trajectory(state.to_density(), spec, lindblad, times)


def evaluate_dynamics(params: cnn.NetworkParams, initial_states, rotations: RotationSet, scheme: BinningScheme,
                      gamma: float = 0.0, h: float = DYNAMICS_H, times=None, shot_levels=DEFAULT_SHOTS,
                      rng_seed=None, dt: float = SPLIT_DT, pbc: bool = True) -> DynamicsEval:
    """Evolve each initial state under TFI+ (plus sigma^x dephasing when ``gamma > 0``),
    image it at every time, and record the exact measure and the network's bins.

    The exact values come from the simulated states only; the network path
    never feeds back into them.
    """
    if params.config.n_outputs != scheme.n_bins:
        raise ValueError("network outputs and binning scheme disagree")
    expected = MeasureKind.ENTROPY if gamma == 0 else MeasureKind.LOG_NEGATIVITY
    if scheme.measure_kind is not expected:
        raise ValueError(f"gamma={gamma} dynamics are scored with {expected.value}")
    times = default_time_grid() if times is None else np.asarray(times, dtype=float)
    rng = np.random.default_rng(rng_seed)
    L = rotations.L
    spec = ModelSpec(ModelKind.TFI_PLUS, L, h, pbc=pbc)
    lindblad = None if gamma == 0 else LindbladConfig(gamma, dt=dt, method="split")
    if gamma == 0:
        spectrum = diagonalize(build_hamiltonian(spec))

    exact = np.empty((len(initial_states), len(times)))
    levels = [0] + [int(m) for m in shot_levels]
    predicted = {m: np.empty((len(initial_states), len(times)), dtype=np.int64) for m in levels}
    for e, psi in enumerate(initial_states):
        if gamma == 0:
            amps = evolve_unitary_times(psi, spectrum, times).T
            exact[e] = pure_measures(amps, L, scheme.measure_kind)
            imgs = images_of_pure_states(amps, L, rotations)
        else:
            states = lindblad_trajectory(psi.to_density(), spec, lindblad, times)
            exact[e] = [measure(s, scheme.measure_kind) for s in states]
            imgs = np.array([image_probs(s, rotations) for s in states])
        for m in levels:
            batch = imgs if m == 0 else sample_frequencies(imgs, m, rng)
            predicted[m][e] = cnn.predict_bin(params, batch)
        log.info("trajectory %d/%d done", e + 1, len(initial_states))
    return DynamicsEval(times, scheme, exact, predicted, gamma)


def bootstrap_ci(samples, n_boot: int = 10_000, level: float = 0.95, rng_seed=0) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean of ``samples``."""
    x = np.asarray(samples, dtype=float)
    rng = np.random.default_rng(rng_seed)
    means = x[rng.integers(0, len(x), size=(n_boot, len(x)))].mean(axis=1)
    a = (1 - level) / 2
    return float(np.quantile(means, a)), float(np.quantile(means, 1 - a))


# --- reports ---------------------------------------------------------------------


def _g(x) -> str:
    return format(float(x), ".9g")


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_errors_csv(stats: ErrorStats, path):
    return _write_csv(path, ["delta", "count"], [[d, c] for d, c in sorted(stats.histogram.items())])


def write_stats_csv(entries, path):
    """``entries`` is an iterable of ``(n_bins, ErrorStats)``."""
    return _write_csv(path, ["nbin", "mu", "sigma"], [[nb, _g(s.mu), _g(s.sigma)] for nb, s in entries])


def write_grid_csv(grid: GridResult, path):
    rows = [[a, b, _g(grid.stats[a, b].mu), _g(grid.stats[a, b].sigma)] for a in grid.kinds for b in grid.kinds]
    return _write_csv(path, ["train_kind", "test_kind", "mu", "sigma"], rows)


def write_dynamics_csv(ev: DynamicsEval, path):
    rows = []
    exact_mean = ev.exact.mean(axis=0)
    for m in ev.shot_levels:
        mid, mu, sig = ev.predicted_mid(m), ev.mu(m), ev.sigma(m)
        for k, t in enumerate(ev.times):
            rows.append([_g(t), _g(exact_mean[k]), _g(mid[k]), _g(mu[k]), _g(sig[k]), m, ev.ensemble_n])
    return _write_csv(path, ["t", "exact", "predicted_mid", "mu_t", "sigma_t", "shots_M", "ensemble_n"], rows)


def write_ppm(probs, path, scale: int = 1):
    """Render an image as a binary PPM, brightest pixel = largest probability.

    Rows are rotations and columns are configurations; ``scale`` repeats
    each row vertically so narrow images stay visible.
    """
    p = np.asarray(getattr(probs, "probs", probs), dtype=float)
    top = p.max() if p.max() > 0 else 1.0
    grey = np.round(255 * p / top).astype(np.uint8)
    grey = np.repeat(grey, scale, axis=0)
    h, w = grey.shape
    rgb = np.repeat(grey[:, :, None], 3, axis=2)
    path = Path(path)
    path.write_bytes(f"P6\n{w} {h}\n255\n".encode() + rgb.tobytes())
    return path


def read_ppm_shape(path) -> tuple[int, int]:
    """``(height, width)`` of a binary PPM written by :func:`write_ppm`."""
    data = Path(path).read_bytes()
    magic, dims, maxval = data.split(b"\n", 3)[:3]
    if magic != b"P6" or maxval != b"255":
        raise ValueError("not a binary 8-bit PPM")
    w, h = (int(v) for v in dims.split())
    return h, w
