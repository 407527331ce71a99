"""A small convolutional classifier written directly in numpy.

Architecture: conv -> ReLU -> width max-pool, twice, then a ReLU dense
layer and a softmax head. By default each image row is first replaced by
its Walsh-Hadamard power spectrum (squared sigma^z-string correlators).
Activations use a channels-last layout ``(batch, rows, columns,
channels)``; rows are rotations, columns are spin configurations.
"""
from __future__ import annotations

import json
import logging
import struct
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imaging import FormatError, StatImage

log = logging.getLogger(__name__)

PARAM_MAGIC = b"QERN"
PARAM_VERSION = 1
PARAM_ORDER = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "dense_w", "dense_b", "out_w", "out_b")


PREPROCESSORS = ("walsh_power", "scaled")


class TrainingDivergedError(RuntimeError):
    pass


def walsh_hadamard(x: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform along the last axis.

    For a probability row ``p`` over spin configurations, entry ``S`` of the
    result is the expectation of the sigma^z string on the sites whose bits
    are set in ``S``.
    """
    x = np.array(x, copy=True)
    D = x.shape[-1]
    if D & (D - 1):
        raise ValueError("length must be a power of two")
    lead = x.shape[:-1]
    h = 1
    while h < D:
        y = x.reshape(lead + (D // (2 * h), 2, h))
        a, b = y[..., 0, :].copy(), y[..., 1, :]
        y[..., 0, :] += b
        y[..., 1, :] = a - b
        h *= 2
    return x


@dataclass(frozen=True)
class NetworkConfig:
    input_shape: tuple[int, int]
    n_outputs: int
    conv1_maps: int = 64
    conv2_maps: int = 32
    kernel1: tuple[int, int] = (3, 9)
    stride1: tuple[int, int] = (1, 4)
    kernel2: tuple[int, int] = (2, 5)
    stride2: tuple[int, int] = (1, 2)
    pool: int = 2
    hidden_units: int = 128
    preprocess: str = "walsh_power"
    input_scale: float | None = None

    def __post_init__(self):
        for name in ("input_shape", "kernel1", "stride1", "kernel2", "stride2"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        if self.preprocess not in PREPROCESSORS:
            raise ValueError(f"unknown preprocessing {self.preprocess!r}")
        if self.input_scale is None:
            D = self.input_shape[1]
            scale = np.sqrt(D) if self.preprocess == "walsh_power" else D
            object.__setattr__(self, "input_scale", float(scale))
        if self.n_outputs < 2:
            raise ValueError("need at least two output classes")
        shapes = self.layer_shapes()
        if min(min(s) for s in shapes.values()) < 1:
            raise ValueError(f"kernels/strides too large for input {self.input_shape}: {shapes}")

    def layer_shapes(self) -> dict[str, tuple[int, int]]:
        def conv(hw, k, s):
            return ((hw[0] - k[0]) // s[0] + 1, (hw[1] - k[1]) // s[1] + 1)

        c1 = conv(self.input_shape, self.kernel1, self.stride1)
        p1 = (c1[0], c1[1] // self.pool)
        c2 = conv(p1, self.kernel2, self.stride2)
        p2 = (c2[0], c2[1] // self.pool)
        return {"conv1": c1, "pool1": p1, "conv2": c2, "pool2": p2}

    @property
    def flat_size(self) -> int:
        h, w = self.layer_shapes()["pool2"]
        return h * w * self.conv2_maps

    def tensor_shapes(self) -> dict[str, tuple[int, ...]]:
        k1, k2 = self.kernel1, self.kernel2
        return {
            "conv1_w": (1, k1[0], k1[1], self.conv1_maps),
            "conv1_b": (self.conv1_maps,),
            "conv2_w": (self.conv1_maps, k2[0], k2[1], self.conv2_maps),
            "conv2_b": (self.conv2_maps,),
            "dense_w": (self.flat_size, self.hidden_units),
            "dense_b": (self.hidden_units,),
            "out_w": (self.hidden_units, self.n_outputs),
            "out_b": (self.n_outputs,),
        }

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> NetworkConfig:
        return cls(**d)


@dataclass(eq=False)
class NetworkParams:
    config: NetworkConfig
    tensors: dict[str, np.ndarray]

    def copy(self) -> NetworkParams:
        return NetworkParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def astype(self, dtype) -> NetworkParams:
        return NetworkParams(self.config, {k: v.astype(dtype) for k, v in self.tensors.items()})

    @property
    def dtype(self):
        return self.tensors["conv1_w"].dtype


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 20
    validation_fraction: float = 0.1
    rng_seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    dtype: str = "float32"

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("learning rate, batch size and epochs must be positive")
        if not 0 < self.validation_fraction <= 0.5:
            raise ValueError("validation fraction must lie in (0, 0.5]")


def _fan_in(name: str, shape) -> int:
    if name.endswith("_b"):
        return 0
    return int(np.prod(shape[:-1]))


def init_params(config: NetworkConfig, rng_seed=None, dtype=np.float64) -> NetworkParams:
    """He-uniform weights ``U(-sqrt(6/fan_in), +sqrt(6/fan_in))`` and zero biases."""
    rng = np.random.default_rng(rng_seed)
    tensors = {}
    for name, shape in config.tensor_shapes().items():
        fan_in = _fan_in(name, shape)
        if fan_in:
            bound = np.sqrt(6.0 / fan_in)
            tensors[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
        else:
            tensors[name] = np.zeros(shape, dtype=dtype)
    return NetworkParams(config, tensors)


# --- layers ------------------------------------------------------------------------


def _im2col(x, kernel, stride):
    kh, kw = kernel
    win = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, :: stride[0], :: stride[1]]
    n, ho, wo, c = win.shape[:4]
    return win.reshape(n * ho * wo, c * kh * kw), (n, ho, wo)


def _col2im(dcols, x_shape, out_hw, kernel, stride):
    kh, kw = kernel
    n, h, w, c = x_shape
    ho, wo = out_hw
    d = dcols.reshape(n, ho, wo, c, kh, kw)
    dx = np.zeros(x_shape, dtype=dcols.dtype)
    sh, sw = stride
    for i in range(kh):
        for j in range(kw):
            dx[:, i : i + sh * ho : sh, j : j + sw * wo : sw, :] += d[..., i, j]
    return dx


def _pool_forward(x, p):
    n, h, w, c = x.shape
    wp = w // p
    blocks = x[:, :, : wp * p, :].reshape(n, h, wp, p, c)
    idx = np.argmax(blocks, axis=3)
    out = np.take_along_axis(blocks, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return out, idx


def _pool_backward(dout, idx, x_shape, p):
    n, h, w, c = x_shape
    wp = dout.shape[2]
    dblocks = np.zeros((n, h, wp, p, c), dtype=dout.dtype)
    np.put_along_axis(dblocks, idx[:, :, :, None, :], dout[:, :, :, None, :], axis=3)
    dx = np.zeros(x_shape, dtype=dout.dtype)
    dx[:, :, : wp * p, :] = dblocks.reshape(n, h, wp * p, c)
    return dx


def _prepare(params: NetworkParams, images) -> np.ndarray:
    if isinstance(images, StatImage):
        images = images.probs
    x = np.asarray(images)
    cfg = params.config
    if x.shape[-2:] != cfg.input_shape:
        raise ValueError(f"image shape {x.shape[-2:]} does not match network input {cfg.input_shape}")
    x = x.reshape((-1,) + cfg.input_shape).astype(params.dtype, copy=False)
    if cfg.preprocess == "walsh_power":
        x = walsh_hadamard(x) ** 2
    return (x * params.dtype.type(cfg.input_scale))[..., None]


def _forward(params: NetworkParams, x, keep=False):
    t, cfg = params.tensors, params.config
    cache = {}
    cols1, (n, h1, w1) = _im2col(x, cfg.kernel1, cfg.stride1)
    z1 = (cols1 @ t["conv1_w"].reshape(-1, cfg.conv1_maps) + t["conv1_b"]).reshape(n, h1, w1, cfg.conv1_maps)
    a1 = np.maximum(z1, 0)
    p1, idx1 = _pool_forward(a1, cfg.pool)
    cols2, (_, h2, w2) = _im2col(p1, cfg.kernel2, cfg.stride2)
    z2 = (cols2 @ t["conv2_w"].reshape(-1, cfg.conv2_maps) + t["conv2_b"]).reshape(n, h2, w2, cfg.conv2_maps)
    a2 = np.maximum(z2, 0)
    p2, idx2 = _pool_forward(a2, cfg.pool)
    flat = p2.reshape(n, -1)
    z3 = flat @ t["dense_w"] + t["dense_b"]
    a3 = np.maximum(z3, 0)
    logits = a3 @ t["out_w"] + t["out_b"]
    if keep:
        cache.update(cols1=cols1, z1=z1, a1_shape=a1.shape, idx1=idx1, p1=p1, cols2=cols2,
                     z2=z2, a2_shape=a2.shape, idx2=idx2, p2_shape=p2.shape, flat=flat, z3=z3, a3=a3)
    return logits, cache


def _softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(params: NetworkParams, images) -> np.ndarray:
    """Class probabilities; ``(N_bin,)`` for one image, ``(N, N_bin)`` for a stack."""
    single = isinstance(images, StatImage) or np.ndim(images) == 2
    logits, _ = _forward(params, _prepare(params, images))
    probs = _softmax(logits)
    return probs[0] if single else probs


def logits(params: NetworkParams, images) -> np.ndarray:
    out, _ = _forward(params, _prepare(params, images))
    return out


def _check_labels(labels, n_out):
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty batch")
    if labels.min() < 1 or labels.max() > n_out:
        raise ValueError(f"labels must lie in 1..{n_out}")
    return labels.astype(np.int64) - 1


def loss_and_grad(params: NetworkParams, images, labels) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy against 1-based bin labels and its gradient for every tensor."""
    cfg, t = params.config, params.tensors
    y = _check_labels(labels, cfg.n_outputs)
    x = _prepare(params, images)
    out, c = _forward(params, x, keep=True)
    n = x.shape[0]
    probs = _softmax(out)
    picked = probs[np.arange(n), y]
    loss = float(-np.mean(np.log(np.maximum(picked, np.finfo(probs.dtype).tiny))))

    g = {}
    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1
    dlogits /= n
    g["out_w"] = c["a3"].T @ dlogits
    g["out_b"] = dlogits.sum(axis=0)
    dz3 = (dlogits @ t["out_w"].T) * (c["z3"] > 0)
    g["dense_w"] = c["flat"].T @ dz3
    g["dense_b"] = dz3.sum(axis=0)
    dp2 = (dz3 @ t["dense_w"].T).reshape(c["p2_shape"])
    dz2 = _pool_backward(dp2, c["idx2"], c["a2_shape"], cfg.pool) * (c["z2"] > 0)
    dz2f = dz2.reshape(-1, cfg.conv2_maps)
    g["conv2_w"] = (c["cols2"].T @ dz2f).reshape(t["conv2_w"].shape)
    g["conv2_b"] = dz2f.sum(axis=0)
    dcols2 = dz2f @ t["conv2_w"].reshape(-1, cfg.conv2_maps).T
    dp1 = _col2im(dcols2, c["p1"].shape, dz2.shape[1:3], cfg.kernel2, cfg.stride2)
    dz1 = _pool_backward(dp1, c["idx1"], c["a1_shape"], cfg.pool) * (c["z1"] > 0)
    dz1f = dz1.reshape(-1, cfg.conv1_maps)
    g["conv1_w"] = (c["cols1"].T @ dz1f).reshape(t["conv1_w"].shape)
    g["conv1_b"] = dz1f.sum(axis=0)
    return loss, g


def predict_bin(params: NetworkParams, images) -> np.ndarray | int:
    """1-based arg-max bin; ``np.argmax`` already resolves ties toward the lower bin."""
    single = isinstance(images, StatImage) or np.ndim(images) == 2
    out = np.argmax(logits(params, images), axis=-1) + 1
    return int(out[0]) if single else out


def predict_bins_batched(params: NetworkParams, images, batch_size: int = 512) -> np.ndarray:
    images = np.asarray(images)
    return np.concatenate(
        [predict_bin(params, images[i : i + batch_size]) for i in range(0, len(images), batch_size)]
    )


# --- training ---------------------------------------------------------------------


@dataclass
class TrainingLog:
    config: TrainConfig
    rows: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    n_train: int = 0
    n_validation: int = 0

    def to_csv_rows(self) -> list[list[str]]:
        header = ["epoch", "train_loss", "val_loss", "val_accuracy"]
        body = [[str(r["epoch"])] + [format(r[k], ".9g") for k in header[1:]] for r in self.rows]
        return [header] + body


def _evaluate_split(params, images, labels, batch_size=512):
    total, correct = 0.0, 0
    for i in range(0, len(images), batch_size):
        xb, yb = images[i : i + batch_size], labels[i : i + batch_size]
        out = logits(params, xb)
        probs = _softmax(out.astype(np.float64))
        total += -np.sum(np.log(np.maximum(probs[np.arange(len(yb)), yb - 1], 1e-300)))
        correct += int(np.sum(np.argmax(out, axis=1) + 1 == yb))
    return total / len(images), correct / len(images)


@np.errstate(over="ignore", invalid="ignore")  # overflow surfaces as a non-finite loss
def train(params: NetworkParams, images, labels, cfg: TrainConfig = TrainConfig()) -> tuple[NetworkParams, TrainingLog]:
    """Adam on shuffled mini-batches, returning the best-validation-accuracy parameters.

    ``images`` has shape ``(N, W, D)``; ``labels`` are 1-based bins.
    """
    images = np.asarray(images)
    labels = np.asarray(labels, dtype=np.int64)
    _check_labels(labels, params.config.n_outputs)
    if len(images) != len(labels):
        raise ValueError("images and labels differ in length")
    rng = np.random.default_rng(cfg.rng_seed)
    order = rng.permutation(len(images))
    n_val = max(1, int(round(cfg.validation_fraction * len(images))))
    val_idx, train_idx = np.sort(order[:n_val]), order[n_val:]
    if len(train_idx) == 0:
        raise ValueError("library too small to split")
    xv, yv = images[val_idx], labels[val_idx]

    dtype = np.dtype(cfg.dtype)
    work = params.astype(dtype)
    m = {k: np.zeros_like(v) for k, v in work.tensors.items()}
    v = {k: np.zeros_like(v) for k, v in work.tensors.items()}
    tlog = TrainingLog(cfg, n_train=len(train_idx), n_validation=n_val)
    best, best_acc, step = work.copy(), -1.0, 0
    b1, b2, lr = cfg.beta1, cfg.beta2, cfg.learning_rate
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(train_idx)
        running, seen = 0.0, 0
        for start in range(0, len(perm), cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            loss, grads = loss_and_grad(work, images[batch], labels[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}, step {step}")
            step += 1
            corr1, corr2 = 1 - b1**step, 1 - b2**step
            for k, gk in grads.items():
                m[k] = b1 * m[k] + (1 - b1) * gk
                v[k] = b2 * v[k] + (1 - b2) * gk * gk
                work.tensors[k] -= (lr * (m[k] / corr1) / (np.sqrt(v[k] / corr2) + cfg.eps)).astype(dtype)
            running += loss * len(batch)
            seen += len(batch)
        val_loss, val_acc = _evaluate_split(work, xv, yv)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(f"non-finite validation loss after epoch {epoch}")
        tlog.rows.append(dict(epoch=epoch, train_loss=running / seen, val_loss=val_loss, val_accuracy=val_acc))
        log.info("epoch %d loss %.4f val_loss %.4f val_acc %.4f", epoch, running / seen, val_loss, val_acc)
        if val_acc > best_acc:
            best, best_acc, tlog.best_epoch = work.copy(), val_acc, epoch
    return best, tlog


# --- parameter files ---------------------------------------------------------------


def save_params(params: NetworkParams, path) -> None:
    """Magic, version, JSON config block, float64 tensors in declared order, CRC32."""
    cfg = json.dumps(params.config.to_dict(), sort_keys=True).encode()
    body = PARAM_MAGIC + struct.pack("<II", PARAM_VERSION, len(cfg)) + cfg
    for name in PARAM_ORDER:
        body += params.tensors[name].astype("<f8").tobytes()
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def load_params(path, expected_config: NetworkConfig | None = None) -> NetworkParams:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != PARAM_MAGIC:
        raise FormatError(f"{path} is not a parameter file")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise FormatError(f"checksum mismatch in {path}")
    version, n_cfg = struct.unpack("<II", body[4:12])
    if version != PARAM_VERSION:
        raise FormatError(f"unsupported parameter file version {version}")
    raw = json.loads(body[12 : 12 + n_cfg])
    for key, val in raw.items():
        if isinstance(val, list):
            raw[key] = tuple(val)
    config = NetworkConfig.from_dict(raw)
    if expected_config is not None and config != expected_config:
        raise FormatError("parameter file was written for a different network configuration")
    offset, tensors = 12 + n_cfg, {}
    for name in PARAM_ORDER:
        shape = config.tensor_shapes()[name]
        size = int(np.prod(shape)) * 8
        chunk = body[offset : offset + size]
        if len(chunk) != size:
            raise FormatError("parameter file is truncated")
        tensors[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        offset += size
    if offset != len(body):
        raise FormatError("trailing bytes in parameter file")
    return NetworkParams(config, tensors)
