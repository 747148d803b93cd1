"""Independent per-label linear classifiers over the byte-feature space.

One weight vector and bias per output (1 for the binary head, 12 for
multi-label), trained by full-batch gradient descent on per-output
sigmoid cross-entropy with an L2 penalty.  Features are standardized
internally for conditioning and the affine transform is folded back
into the stored weights, so prediction is exactly
``sigmoid(w . x + b)`` on raw feature vectors.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from pglot.conv import Head
from pglot.errors import Corrupt, EmptyDataset, SpecMismatch, VersionMismatch
from pglot.features import FeatureSpec, FeatureVector
from pglot.formats import ALL_FORMATS
from pglot.formats.checksums import crc32

MAGIC = b"PGLIN"
FILE_VERSION = 1


@dataclass
class LinearModel:
    spec: FeatureSpec
    head: Head
    w: np.ndarray   # (O, dim) float64
    b: np.ndarray   # (O,) float64

    @property
    def n_outputs(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class LinearTrainConfig:
    lr: float = 0.5
    epochs: int = 400
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grad(w: np.ndarray, b: np.ndarray, x: np.ndarray, y: np.ndarray,
                  l2: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean per-output sigmoid cross-entropy + l2*|w|^2/2; exact gradient."""
    logits = x @ w.T + b
    per = np.maximum(logits, 0) - logits * y + np.log1p(np.exp(-np.abs(logits)))
    loss = float(per.mean()) + 0.5 * l2 * float((w * w).sum())
    dlogits = (_sigmoid(logits) - y) / logits.size
    dw = dlogits.T @ x + l2 * w
    db = dlogits.sum(axis=0)
    return loss, dw, db


def train_linear(x: np.ndarray, y: np.ndarray, spec: FeatureSpec, head: Head,
                 cfg: LinearTrainConfig = LinearTrainConfig()) -> tuple[LinearModel, list[dict]]:
    """Gradient descent from zero weights; deterministic in (data, config).

    ``x`` rows are raw feature vectors (``featurize_matrix`` output) and
    ``y`` is (N, n_outputs) with entries in {0, 1}.
    """
    if x.size == 0 or len(x) == 0:
        raise EmptyDataset("no training samples")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[0] != x.shape[0]:
        raise ValueError("y must be (N, n_outputs) aligned with x")
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    xs = (x - mu) / sd
    n_out = y.shape[1]
    w = np.zeros((n_out, x.shape[1]))
    b = np.zeros(n_out)
    history = []
    for epoch in range(cfg.epochs):
        loss, dw, db = loss_and_grad(w, b, xs, y, cfg.l2)
        w -= cfg.lr * dw
        b -= cfg.lr * db
        history.append({"epoch": epoch, "loss": loss})
    # Fold standardization into the raw-feature parameterization.
    w_raw = w / sd
    b_raw = b - w_raw @ mu
    return LinearModel(spec, head, w_raw, b_raw), history


def scores(model: LinearModel, vec: FeatureVector | np.ndarray) -> np.ndarray:
    """Per-output probabilities sigmoid(w . x + b)."""
    x = vec.concat() if isinstance(vec, FeatureVector) else np.asarray(vec, dtype=np.float64)
    if x.shape != (model.w.shape[1],):
        raise SpecMismatch(f"feature vector has shape {x.shape}, model wants ({model.w.shape[1]},)")
    return _sigmoid(model.w @ x + model.b)


def predict_linear(model: LinearModel, vec: FeatureVector | np.ndarray):
    """Binary: True iff p > 0.5.  Multi-label: formats with p > 0.5."""
    p = scores(model, vec)
    if model.head is Head.BINARY:
        return bool(p[0] > 0.5)
    return {fmt for fmt, pi in zip(ALL_FORMATS, p) if pi > 0.5}


# --- persistence ----------------------------------------------------------

def save_bytes(model: LinearModel) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", FILE_VERSION))
    buf.write(struct.pack("<BBI", model.head.value, 1 if model.spec.normalize_hist else 0,
                          model.spec.k))
    for g in model.spec.vocab:
        buf.write(struct.pack("<B", len(g)))
        buf.write(g)
    buf.write(struct.pack("<II", model.n_outputs, model.w.shape[1]))
    buf.write(model.w.astype("<f8").tobytes())
    buf.write(model.b.astype("<f8").tobytes())
    body = buf.getvalue()
    return body + struct.pack("<I", crc32(body))


def save(model: LinearModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_bytes(model))


def load_bytes(blob: bytes) -> LinearModel:
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
    head_v, norm, k = struct.unpack_from("<BBI", body, pos)
    pos += 6
    vocab = []
    for _ in range(k):
        if pos >= len(body):
            raise Corrupt("vocabulary truncated")
        (ln,) = struct.unpack_from("<B", body, pos)
        pos += 1
        vocab.append(body[pos:pos + ln])
        pos += ln
    try:
        spec = FeatureSpec(tuple(vocab), bool(norm))
    except ValueError as exc:
        raise Corrupt(f"invalid feature spec: {exc}") from exc
    n_out, dim = struct.unpack_from("<II", body, pos)
    pos += 8
    want = (n_out * dim + n_out) * 8
    if len(body) - pos != want:
        raise Corrupt(f"parameter payload is {len(body) - pos} bytes, expected {want}")
    w = np.frombuffer(body, dtype="<f8", count=n_out * dim, offset=pos).reshape(n_out, dim).copy()
    pos += n_out * dim * 8
    b = np.frombuffer(body, dtype="<f8", count=n_out, offset=pos).copy()
    if dim != spec.dim:
        raise Corrupt(f"weight dim {dim} does not match feature spec dim {spec.dim}")
    return LinearModel(spec, Head(head_v), w, b)


def load(path) -> LinearModel:
    with open(path, "rb") as fh:
        return load_bytes(fh.read())
