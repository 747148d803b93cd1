"""Pure-numpy implementations of the hot byte-level kernels.

These mirror ``_ckern`` (the Cython extension) exactly; the package
selects between them at import time.  Shapes and integer results are
bit-identical across backends; float accumulation order may differ, so
float comparisons between backends use tolerances.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

NAME = "py"


def hist256(data: bytes) -> np.ndarray:
    """Count of each byte value; int64[256]."""
    a = np.frombuffer(data, dtype=np.uint8)
    return np.bincount(a, minlength=256).astype(np.int64)


def ngram_counts(data: bytes, codes2: np.ndarray, codes3: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Occurrences of specific 2-/3-grams (given as sorted integer codes).

    A 2-gram (a, b) has code a*256 + b; a 3-gram adds another byte in the
    low position.  Overlapping windows.  Returns int64 counts aligned
    with the code arrays.
    """
    a = np.frombuffer(data, dtype=np.uint8).astype(np.int64)
    out2 = np.zeros(len(codes2), dtype=np.int64)
    out3 = np.zeros(len(codes3), dtype=np.int64)
    if len(a) >= 2 and len(codes2):
        grams = (a[:-1] << 8) | a[1:]
        idx = np.searchsorted(codes2, grams)
        idx[idx == len(codes2)] = 0
        hit = codes2[idx] == grams
        if hit.any():
            out2 += np.bincount(idx[hit], minlength=len(codes2))
    if len(a) >= 3 and len(codes3):
        grams = (a[:-2] << 16) | (a[1:-1] << 8) | a[2:]
        idx = np.searchsorted(codes3, grams)
        idx[idx == len(codes3)] = 0
        hit = codes3[idx] == grams
        if hit.any():
            out3 += np.bincount(idx[hit], minlength=len(codes3))
    return out2, out3


def embed_windows(ids: np.ndarray, emb: np.ndarray, window: int, stride: int) -> np.ndarray:
    """Gather embeddings and lay them out as flattened conv windows.

    ids: uint16[L]; emb: float[V, D].  Returns float[P, window*D] with
    P = (L - window) // stride + 1.
    """
    seq = emb[ids]
    length, dim = seq.shape
    p = (length - window) // stride + 1
    s0, s1 = seq.strides
    view = as_strided(seq, shape=(p, window, dim), strides=(s0 * stride, s0, s1))
    return np.ascontiguousarray(view).reshape(p, window * dim)


def scatter_window_grads(ids: np.ndarray, rows: np.ndarray, dxrows: np.ndarray,
                         demb: np.ndarray, window: int, stride: int) -> None:
    """Accumulate window gradients into the embedding gradient.

    rows: int64[R] window indices; dxrows: float[R, window*D] gradients
    of those flattened windows; demb: float[V, D], modified in place.
    """
    dim = demb.shape[1]
    for r, row in enumerate(rows):
        base = int(row) * stride
        seg = ids[base:base + window]
        np.add.at(demb, seg, dxrows[r].reshape(window, dim))
