"""Byte-level convolutional detector trained from scratch.

Architecture: a learned embedding over 257 tokens (byte values plus a
pad symbol) -> one convolution over 16-byte windows at stride 8 ->
ReLU -> global max pool over window positions -> fully connected ReLU
layers (512, 512, 128) -> per-output sigmoid head, either 1 output
(polyglot vs monoglot) or 12 (one per format).

The global max pool makes the detector shift-tolerant: moving a byte
pattern by a multiple of the stride leaves the window contents, and
hence the pooled features, unchanged except at region boundaries.

A ``gated=True`` variant replaces ReLU with the multiplicative gating
of the older wide-window byte classifier this design descends from
(512-byte windows, conv * sigmoid(gate)); it exists so the two
architectures can be compared on equal footing.

Everything here is plain numpy plus the ``pglot.kernels`` gather and
scatter primitives; gradients are exact for the forward definition and
are verified against central finite differences in the test suite.
"""

from __future__ import annotations

import enum
import io
import struct
from dataclasses import dataclass

import numpy as np

from pglot import kernels
from pglot.errors import Corrupt, EmptyDataset, VersionMismatch
from pglot.formats import ALL_FORMATS, FormatId
from pglot.formats.checksums import crc32

MAGIC = b"PGCNN"
FILE_VERSION = 1


class Head(enum.Enum):
    BINARY = 0
    MULTILABEL = 1


@dataclass(frozen=True)
class ConvNetConfig:
    max_len: int = 16384
    embed_dim: int = 8
    window: int = 16
    stride: int = 8
    filters: int = 128
    fc_sizes: tuple[int, ...] = (512, 512, 128)
    head: Head = Head.BINARY
    pad_token: int = 256
    gated: bool = False

    def __post_init__(self):
        if self.max_len % self.stride or self.max_len < self.window:
            raise ValueError("max_len must be a multiple of stride and >= window")
        if self.window % self.stride:
            raise ValueError("window must be a multiple of stride")
        if not (0 < self.pad_token <= 256):
            raise ValueError("pad_token must be 256 (one past the byte values)")

    @property
    def n_outputs(self) -> int:
        return 1 if self.head is Head.BINARY else len(ALL_FORMATS)

    @property
    def n_windows(self) -> int:
        return (self.max_len - self.window) // self.stride + 1


def default_config(head: Head = Head.BINARY, max_len: int = 16384,
                   filters: int = 128) -> ConvNetConfig:
    """The 16/8 narrow-window ReLU detector (desk-scale filter count)."""
    return ConvNetConfig(max_len=max_len, filters=filters, head=head)


def wide_window_gated_config(head: Head = Head.BINARY, max_len: int = 16384) -> ConvNetConfig:
    """The older 512-byte-window gated architecture, for comparison runs."""
    return ConvNetConfig(max_len=max_len, window=512, stride=512, filters=128,
                         fc_sizes=(128,), head=head, gated=True)


@dataclass
class ConvNetParams:
    """All learnable tensors; arrays share one float dtype."""

    config: ConvNetConfig
    embedding: np.ndarray                      # (257, D)
    conv_w: np.ndarray                         # (F, W*D)
    conv_b: np.ndarray                         # (F,)
    gate_w: np.ndarray | None                  # gated variant only
    gate_b: np.ndarray | None
    fc: list[tuple[np.ndarray, np.ndarray]]    # [(out, in), (out,)]
    head_w: np.ndarray                         # (O, fc_sizes[-1])
    head_b: np.ndarray                         # (O,)
    version: int = FILE_VERSION

    @property
    def dtype(self):
        return self.embedding.dtype

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        out = [("embedding", self.embedding), ("conv_w", self.conv_w), ("conv_b", self.conv_b)]
        if self.config.gated:
            out += [("gate_w", self.gate_w), ("gate_b", self.gate_b)]
        for i, (w, b) in enumerate(self.fc):
            out += [(f"fc{i}_w", w), (f"fc{i}_b", b)]
        out += [("head_w", self.head_w), ("head_b", self.head_b)]
        return out

    def copy(self) -> "ConvNetParams":
        return ConvNetParams(
            self.config, self.embedding.copy(), self.conv_w.copy(), self.conv_b.copy(),
            None if self.gate_w is None else self.gate_w.copy(),
            None if self.gate_b is None else self.gate_b.copy(),
            [(w.copy(), b.copy()) for w, b in self.fc],
            self.head_w.copy(), self.head_b.copy(), self.version,
        )


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init(config: ConvNetConfig, seed: int, dtype=np.float32) -> ConvNetParams:
    """Scaled-uniform init: weights U(-L, L) with L = sqrt(6/(fan_in+fan_out)),
    embedding rows U(+/- sqrt(3/D)), biases zero.  Deterministic in seed."""
    rng = np.random.Generator(np.random.PCG64(seed))
    d = config.embed_dim
    wd = config.window * d
    emb = rng.uniform(-np.sqrt(3.0 / d), np.sqrt(3.0 / d), size=(257, d)).astype(dtype)
    conv_w = _glorot(rng, wd, config.filters, (config.filters, wd), dtype)
    conv_b = np.zeros(config.filters, dtype=dtype)
    gate_w = gate_b = None
    if config.gated:
        gate_w = _glorot(rng, wd, config.filters, (config.filters, wd), dtype)
        gate_b = np.zeros(config.filters, dtype=dtype)
    fc = []
    prev = config.filters
    for size in config.fc_sizes:
        fc.append((_glorot(rng, prev, size, (size, prev), dtype), np.zeros(size, dtype=dtype)))
        prev = size
    head_w = _glorot(rng, prev, config.n_outputs, (config.n_outputs, prev), dtype)
    head_b = np.zeros(config.n_outputs, dtype=dtype)
    return ConvNetParams(config, emb, conv_w, conv_b, gate_w, gate_b, fc, head_w, head_b)


# --- forward ----------------------------------------------------------------

def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class _Cache:
    ids: np.ndarray
    n_real: int                  # rows actually computed
    x: np.ndarray                # (P', W*D)
    zc: np.ndarray               # (P', F)
    zg: np.ndarray | None
    act: np.ndarray              # (P', F)
    pad_x: np.ndarray | None     # (W*D,)
    pad_zc: np.ndarray | None    # (F,)
    pad_zg: np.ndarray | None
    pad_act: np.ndarray | None   # (F,)
    pooled: np.ndarray           # (F,)
    argmax: np.ndarray           # int64[F], row index into act
    from_pad: np.ndarray         # bool[F]


def _encode(data: bytes, config: ConvNetConfig) -> tuple[np.ndarray, int, bool]:
    """Token ids covering every window that touches content.

    Windows that lie entirely in the padding are all identical; the
    caller folds a single representative into the pool, so only
    (ids, real window count, whether all-pad windows exist) is needed
    to reproduce the full fixed-capacity forward exactly.
    """
    raw = data[:config.max_len]
    n = len(raw)
    s, w = config.stride, config.window
    total = config.n_windows
    count = 0 if n == 0 else min(total, (n - 1) // s + 1)
    length = (count - 1) * s + w if count else 0
    ids = np.full(length, config.pad_token, dtype=np.uint16)
    if n:
        ids[:n] = np.frombuffer(raw, dtype=np.uint8)
    return ids, count, count < total


def _conv_rows(params: ConvNetParams, x: np.ndarray):
    zc = x @ params.conv_w.T + params.conv_b
    if params.config.gated:
        zg = x @ params.gate_w.T + params.gate_b
        act = zc * _sigmoid(zg)
        return zc, zg, act
    return zc, None, np.maximum(zc, 0)


def forward_cache(params: ConvNetParams, data: bytes) -> _Cache:
    cfg = params.config
    ids, count, has_pad = _encode(data, cfg)
    dt = params.dtype
    wd = cfg.window * cfg.embed_dim
    if count:
        x = kernels.embed_windows(ids, params.embedding, cfg.window, cfg.stride)
    else:
        x = np.zeros((0, wd), dtype=dt)
    zc, zg, act = _conv_rows(params, x)
    pad_x = pad_zc = pad_zg = pad_act = None
    if has_pad:
        pad_x = np.tile(params.embedding[cfg.pad_token], cfg.window)
        pzc, pzg, pact = _conv_rows(params, pad_x[None, :])
        pad_zc, pad_act = pzc[0], pact[0]
        pad_zg = None if pzg is None else pzg[0]
    f = cfg.filters
    neg_inf = np.array(-np.inf, dtype=dt)
    if count:
        argmax = act.argmax(axis=0)
        real_max = act[argmax, np.arange(f)]
    else:
        argmax = np.zeros(f, dtype=np.int64)
        real_max = np.full(f, neg_inf, dtype=dt)
    if has_pad:
        from_pad = pad_act > real_max     # ties resolve to the earlier, real window
        pooled = np.where(from_pad, pad_act, real_max)
    else:
        from_pad = np.zeros(f, dtype=bool)
        pooled = real_max
    return _Cache(ids, count, x, zc, zg, act, pad_x, pad_zc, pad_zg, pad_act,
                  pooled.astype(dt, copy=False), argmax, from_pad)


def _fc_forward(params: ConvNetParams, pooled: np.ndarray):
    hs = [pooled]
    zs = []
    for w, b in params.fc:
        z = hs[-1] @ w.T + b
        zs.append(z)
        hs.append(np.maximum(z, 0))
    logits = hs[-1] @ params.head_w.T + params.head_b
    return hs, zs, logits


def forward(params: ConvNetParams, data: bytes) -> np.ndarray:
    """Output probabilities in (0, 1); input truncated to max_len, padded."""
    cache = forward_cache(params, data)
    _, _, logits = _fc_forward(params, cache.pooled[None, :])
    return _sigmoid(logits[0])


def predict(params: ConvNetParams, data: bytes):
    """Binary head: True iff P(polyglot) > 0.5.  Multi-label head: the set
    of formats whose probability exceeds 0.5 (strictly)."""
    probs = forward(params, data)
    if params.config.head is Head.BINARY:
        return bool(probs[0] > 0.5)
    return {fmt for fmt, p in zip(ALL_FORMATS, probs) if p > 0.5}


# --- loss and gradients ------------------------------------------------------

def _bce_with_logits(logits: np.ndarray, y: np.ndarray) -> float:
    # max(z,0) - z*y + log1p(exp(-|z|)), averaged over batch and outputs
    per = np.maximum(logits, 0) - logits * y + np.log1p(np.exp(-np.abs(logits)))
    return float(per.mean())


def zero_grads(params: ConvNetParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.named_arrays()}


def loss_and_grad(params: ConvNetParams, batch: list[tuple[bytes, np.ndarray]]):
    """Mean per-output sigmoid cross-entropy and its exact gradient."""
    if not batch:
        raise EmptyDataset("empty batch")
    cfg = params.config
    caches = [forward_cache(params, data) for data, _ in batch]
    pooled = np.stack([c.pooled for c in caches])
    y = np.stack([np.asarray(t, dtype=params.dtype) for _, t in batch])
    hs, zs, logits = _fc_forward(params, pooled)
    loss = _bce_with_logits(logits, y)
    grads = zero_grads(params)

    b = len(batch)
    dlogits = (_sigmoid(logits) - y) / (b * cfg.n_outputs)
    grads["head_w"] += dlogits.T @ hs[-1]
    grads["head_b"] += dlogits.sum(axis=0)
    dh = dlogits @ params.head_w
    for i in reversed(range(len(params.fc))):
        dz = dh * (zs[i] > 0)
        grads[f"fc{i}_w"] += dz.T @ hs[i]
        grads[f"fc{i}_b"] += dz.sum(axis=0)
        dh = dz @ params.fc[i][0]

    for j, cache in enumerate(caches):
        _conv_backward(params, cache, dh[j], grads)
    return loss, grads


def _conv_backward(params: ConvNetParams, cache: _Cache, dpooled: np.ndarray,
                   grads: dict[str, np.ndarray]) -> None:
    cfg = params.config
    f = cfg.filters
    fidx = np.arange(f)

    if cache.n_real:
        real = ~cache.from_pad
        if cfg.gated:
            alive = real
        else:
            vals = cache.act[cache.argmax, fidx]
            alive = real & (vals > 0)
        alive &= dpooled != 0
        if alive.any():
            rows = np.unique(cache.argmax[alive])
            da = np.zeros((len(rows), f), dtype=params.dtype)
            da[np.searchsorted(rows, cache.argmax[alive]), fidx[alive]] = dpooled[alive]
            _conv_row_grads(params, cache.x[rows], cache.zc[rows],
                            None if cache.zg is None else cache.zg[rows],
                            da, grads, cache.ids, rows)

    if cache.pad_act is not None:
        if cfg.gated:
            padf = cache.from_pad
        else:
            padf = cache.from_pad & (cache.pad_act > 0)
        padf = padf & (dpooled != 0)
        if padf.any():
            da = np.where(padf, dpooled, 0)[None, :].astype(params.dtype)
            dx = _conv_row_grads(params, cache.pad_x[None, :], cache.pad_zc[None, :],
                                 None if cache.pad_zg is None else cache.pad_zg[None, :],
                                 da, grads, None, None)
            d = cfg.embed_dim
            grads["embedding"][cfg.pad_token] += dx[0].reshape(cfg.window, d).sum(axis=0)


def _conv_row_grads(params, x_rows, zc_rows, zg_rows, da, grads, ids, rows):
    """Backprop ``da`` (grad of the activation rows) into kernels and input."""
    if params.config.gated:
        sig = _sigmoid(zg_rows)
        dzc = da * sig
        dzg = da * zc_rows * sig * (1 - sig)
        grads["conv_w"] += dzc.T @ x_rows
        grads["conv_b"] += dzc.sum(axis=0)
        grads["gate_w"] += dzg.T @ x_rows
        grads["gate_b"] += dzg.sum(axis=0)
        dx = dzc @ params.conv_w + dzg @ params.gate_w
    else:
        dzc = da * (zc_rows > 0)
        grads["conv_w"] += dzc.T @ x_rows
        grads["conv_b"] += dzc.sum(axis=0)
        dx = dzc @ params.conv_w
    if ids is not None:
        kernels.scatter_window_grads(ids, rows.astype(np.int64),
                                     np.ascontiguousarray(dx), grads["embedding"],
                                     params.config.window, params.config.stride)
    return dx


# --- training ----------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 8
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")


class AdamState:
    """Adaptive-moment gradient descent with the conventional defaults."""

    def __init__(self, params: ConvNetParams, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.named_arrays()}
        self.v = {k: np.zeros_like(v) for k, v in params.named_arrays()}

    def step(self, params: ConvNetParams, grads: dict[str, np.ndarray]) -> None:
        c = self.cfg
        self.t += 1
        corr1 = 1 - c.beta1 ** self.t
        corr2 = 1 - c.beta2 ** self.t
        for name, arr in params.named_arrays():
            g = grads[name]
            if c.weight_decay and not name.endswith("_b"):
                g = g + c.weight_decay * arr
            m = self.m[name]
            v = self.v[name]
            m *= c.beta1
            m += (1 - c.beta1) * g
            v *= c.beta2
            v += (1 - c.beta2) * (g * g)
            arr -= (c.lr * (m / corr1) / (np.sqrt(v / corr2) + c.eps)).astype(arr.dtype)


def train(params: ConvNetParams, samples: list[tuple[bytes, np.ndarray]],
          cfg: TrainConfig) -> tuple[ConvNetParams, list[dict]]:
    """Adam over shuffled minibatches; deterministic in cfg.seed.

    Returns the trained params (mutated in place) and a per-epoch
    history of mean training loss.
    """
    if not samples:
        raise EmptyDataset("no training samples")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    opt = AdamState(params, cfg)
    history: list[dict] = []
    n = len(samples)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        batches = 0
        for start in range(0, n, cfg.batch_size):
            batch = [samples[i] for i in order[start:start + cfg.batch_size]]
            loss, grads = loss_and_grad(params, batch)
            opt.step(params, grads)
            total += loss
            batches += 1
        history.append({"epoch": epoch, "loss": total / batches})
    return params, history


def binary_target(is_polyglot: bool) -> np.ndarray:
    return np.array([1.0 if is_polyglot else 0.0])


def multilabel_target(labels) -> np.ndarray:
    y = np.zeros(len(ALL_FORMATS))
    for fmt in labels:
        y[ALL_FORMATS.index(fmt)] = 1.0
    return y


# --- persistence ---------------------------------------------------------------

def save_bytes(params: ConvNetParams) -> bytes:
    cfg = params.config
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", FILE_VERSION))
    buf.write(struct.pack("<IHHHI", cfg.max_len, cfg.embed_dim, cfg.window,
                          cfg.stride, cfg.filters))
    buf.write(struct.pack("<H", len(cfg.fc_sizes)))
    for s in cfg.fc_sizes:
        buf.write(struct.pack("<I", s))
    buf.write(struct.pack("<BHB", cfg.head.value, cfg.pad_token, 1 if cfg.gated else 0))
    for _, arr in params.named_arrays():
        buf.write(arr.astype("<f4").tobytes())
    body = buf.getvalue()
    return body + struct.pack("<I", crc32(body))


def save(params: ConvNetParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_bytes(params))


def load_bytes(blob: bytes, expect_config: ConvNetConfig | None = None) -> ConvNetParams:
    if len(blob) < len(MAGIC) + 2 + 4:
        raise Corrupt("model file too short")
    if blob[:len(MAGIC)] != MAGIC:
        raise Corrupt("bad magic")
    body, tail = blob[:-4], blob[-4:]
    if struct.unpack("<I", tail)[0] != crc32(body):
        raise Corrupt("checksum mismatch")
    pos = len(MAGIC)
    (version,) = struct.unpack_from("<H", body, pos)
    pos += 2
    if version != FILE_VERSION:
        raise VersionMismatch(f"model file version {version}, expected {FILE_VERSION}")
    max_len, embed_dim, window, stride, filters = struct.unpack_from("<IHHHI", body, pos)
    pos += 14
    (n_fc,) = struct.unpack_from("<H", body, pos)
    pos += 2
    fc_sizes = struct.unpack_from(f"<{n_fc}I", body, pos)
    pos += 4 * n_fc
    head_v, pad_token, gated = struct.unpack_from("<BHB", body, pos)
    pos += 4
    try:
        config = ConvNetConfig(max_len, embed_dim, window, stride, filters,
                               tuple(fc_sizes), Head(head_v), pad_token, bool(gated))
    except ValueError as exc:
        raise Corrupt(f"invalid config block: {exc}") from exc
    if expect_config is not None and config != expect_config:
        raise VersionMismatch(f"model config {config} differs from expected {expect_config}")
    shell = init(config, seed=0)
    want = sum(arr.size for _, arr in shell.named_arrays()) * 4
    if len(body) - pos != want:
        raise Corrupt(f"parameter payload is {len(body) - pos} bytes, expected {want}")
    for _, arr in shell.named_arrays():
        flat = np.frombuffer(body, dtype="<f4", count=arr.size, offset=pos)
        arr[...] = flat.reshape(arr.shape)
        pos += arr.size * 4
    if not all(np.isfinite(arr).all() for _, arr in shell.named_arrays()):
        raise Corrupt("non-finite parameter values")
    return shell


def load(path, expect_config: ConvNetConfig | None = None) -> ConvNetParams:
    with open(path, "rb") as fh:
        return load_bytes(fh.read(), expect_config)
