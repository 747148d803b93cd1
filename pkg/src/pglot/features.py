"""Byte histogram + first-format one-hot + top-K n-gram counts.

The n-gram vocabulary is the K most frequent 2- and 3-grams pooled
across the training files (overlapping windows, total count across the
corpus).  Ties are broken by shorter gram first, then lexicographic
byte order, so the vocabulary is a pure function of the training set.

The one-hot slot comes from the internal ``identify_first`` rather than
an external mime tool: it removes a runtime dependency and actually
distinguishes the script formats, which generic text labels cannot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pglot import kernels
from pglot.errors import EmptyCorpus
from pglot.formats import ALL_FORMATS, FORMAT_INDEX, FormatId, identify_first

MIME_SLOTS = len(ALL_FORMATS) + 1  # the 12 formats plus UNKNOWN
HIST_SLOTS = 256


@dataclass(frozen=True)
class FeatureSpec:
    """A fixed feature layout: histogram, one-hot, and n-gram vocabulary."""

    vocab: tuple[bytes, ...]
    normalize_hist: bool = True

    def __post_init__(self):
        if len(set(self.vocab)) != len(self.vocab):
            raise ValueError("vocabulary entries must be unique")
        if any(len(g) not in (2, 3) for g in self.vocab):
            raise ValueError("vocabulary grams must have length 2 or 3")

    @property
    def k(self) -> int:
        return len(self.vocab)

    @property
    def dim(self) -> int:
        return HIST_SLOTS + MIME_SLOTS + self.k


@dataclass(frozen=True)
class FeatureVector:
    hist: np.ndarray    # float64[256]
    mime: np.ndarray    # float64[13]
    ngrams: np.ndarray  # float64[K]

    def concat(self) -> np.ndarray:
        return np.concatenate([self.hist, self.mime, self.ngrams])


def _gram_code(g: bytes) -> int:
    code = 0
    for b in g:
        code = (code << 8) | b
    return code


def _vocab_index(spec: FeatureSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Sorted code arrays plus the permutations back to vocab slots."""
    c2, s2, c3, s3 = [], [], [], []
    for slot, g in enumerate(spec.vocab):
        if len(g) == 2:
            c2.append(_gram_code(g))
            s2.append(slot)
        else:
            c3.append(_gram_code(g))
            s3.append(slot)
    a2 = np.array(c2, dtype=np.int64)
    a3 = np.array(c3, dtype=np.int64)
    o2 = np.argsort(a2, kind="stable")
    o3 = np.argsort(a3, kind="stable")
    return a2[o2], np.array(s2, dtype=np.int64)[o2], a3[o3], np.array(s3, dtype=np.int64)[o3]


def byte_histogram(data: bytes, normalize: bool = True) -> np.ndarray:
    """Per-byte-value counts; divided by length when ``normalize``."""
    counts = kernels.hist256(data).astype(np.float64)
    if normalize and len(data):
        counts /= len(data)
    return counts


def ngram_vocab(train_samples: list[bytes], k: int, normalize_hist: bool = True) -> FeatureSpec:
    """Learn the top-K 2-/3-gram vocabulary from training bytes only."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not any(len(s) for s in train_samples):
        raise EmptyCorpus("no nonempty training samples")
    counts2 = np.zeros(65536, dtype=np.int64)
    tri: dict[int, int] = {}
    for s in train_samples:
        a = np.frombuffer(s, dtype=np.uint8).astype(np.int64)
        if len(a) >= 2:
            counts2 += np.bincount((a[:-1] << 8) | a[1:], minlength=65536)
        if len(a) >= 3:
            codes = (a[:-2] << 16) | (a[1:-1] << 8) | a[2:]
            uniq, cnt = np.unique(codes, return_counts=True)
            for code, c in zip(uniq.tolist(), cnt.tolist()):
                tri[code] = tri.get(code, 0) + c
    candidates: list[tuple[int, bytes]] = []
    for code in np.nonzero(counts2)[0].tolist():
        candidates.append((int(counts2[code]), bytes((code >> 8, code & 0xFF))))
    for code, c in tri.items():
        candidates.append((c, bytes((code >> 16, (code >> 8) & 0xFF, code & 0xFF))))
    candidates.sort(key=lambda it: (-it[0], len(it[1]), it[1]))
    vocab = tuple(g for _, g in candidates[:k])
    return FeatureSpec(vocab, normalize_hist)


def featurize(data: bytes, spec: FeatureSpec) -> FeatureVector:
    """Histogram + one-hot + overlapping n-gram counts under ``spec``."""
    hist = byte_histogram(data, spec.normalize_hist)
    mime = np.zeros(MIME_SLOTS, dtype=np.float64)
    first = identify_first(data)
    mime[FORMAT_INDEX[first] if first is not FormatId.UNKNOWN else MIME_SLOTS - 1] = 1.0
    ngrams = np.zeros(spec.k, dtype=np.float64)
    if spec.k:
        codes2, slots2, codes3, slots3 = _vocab_index(spec)
        n2, n3 = kernels.ngram_counts(data, codes2, codes3)
        ngrams[slots2] = n2
        ngrams[slots3] = n3
    return FeatureVector(hist, mime, ngrams)


def featurize_matrix(samples: list[bytes], spec: FeatureSpec) -> np.ndarray:
    """Stacked concat() vectors; rows align with ``samples``."""
    out = np.empty((len(samples), spec.dim), dtype=np.float64)
    codes2, slots2, codes3, slots3 = _vocab_index(spec)
    for i, data in enumerate(samples):
        hist = byte_histogram(data, spec.normalize_hist)
        mime = np.zeros(MIME_SLOTS, dtype=np.float64)
        first = identify_first(data)
        mime[FORMAT_INDEX[first] if first is not FormatId.UNKNOWN else MIME_SLOTS - 1] = 1.0
        ngrams = np.zeros(spec.k, dtype=np.float64)
        if spec.k:
            n2, n3 = kernels.ngram_counts(data, codes2, codes3)
            ngrams[slots2] = n2
            ngrams[slots3] = n3
        out[i] = np.concatenate([hist, mime, ngrams])
    return out
