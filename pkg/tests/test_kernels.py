"""Backend parity: the compiled kernels must match the numpy fallback."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pglot.kernels import available_backends

BACKENDS = available_backends()
pairs = pytest.mark.skipif(len(BACKENDS) < 2,
                           reason="compiled kernel extension not built")


def _codes(grams):
    out2, out3 = [], []
    for g in grams:
        code = 0
        for b in g:
            code = (code << 8) | b
        (out2 if len(g) == 2 else out3).append(code)
    return (np.array(sorted(out2), dtype=np.int64),
            np.array(sorted(out3), dtype=np.int64))


@pairs
@settings(max_examples=50, deadline=None)
@given(st.binary(max_size=2000))
def test_hist256_parity(data):
    ref = BACKENDS["py"].hist256(data)
    out = BACKENDS["c"].hist256(data)
    assert np.array_equal(ref, out)
    assert ref.sum() == len(data)


@pairs
@settings(max_examples=50, deadline=None)
@given(st.binary(max_size=1500), st.sets(st.binary(min_size=2, max_size=3), max_size=12))
def test_ngram_parity(data, grams):
    c2, c3 = _codes(grams)
    ref = BACKENDS["py"].ngram_counts(data, c2, c3)
    out = BACKENDS["c"].ngram_counts(data, c2, c3)
    assert np.array_equal(ref[0], out[0])
    assert np.array_equal(ref[1], out[1])


@pairs
@pytest.mark.parametrize("dtype", [np.float32, np.float64], ids=["f32", "f64"])
@pytest.mark.parametrize("window,stride", [(16, 8), (16, 16), (512, 512)])
def test_embed_windows_parity(dtype, window, stride):
    rng = np.random.default_rng(0)
    length = max(window, 777 - 777 % stride + window)
    ids = rng.integers(0, 257, length).astype(np.uint16)
    emb = rng.standard_normal((257, 8)).astype(dtype)
    ref = BACKENDS["py"].embed_windows(ids, emb, window, stride)
    out = BACKENDS["c"].embed_windows(ids, emb, window, stride)
    assert ref.dtype == out.dtype == dtype
    assert np.array_equal(ref, out)


@pairs
@pytest.mark.parametrize("dtype", [np.float32, np.float64], ids=["f32", "f64"])
def test_scatter_parity(dtype):
    rng = np.random.default_rng(1)
    window, stride = 16, 8
    ids = rng.integers(0, 257, 264).astype(np.uint16)
    p = (len(ids) - window) // stride + 1
    rows = np.sort(rng.choice(p, size=9, replace=False)).astype(np.int64)
    dx = rng.standard_normal((9, window * 8)).astype(dtype)
    a = np.zeros((257, 8), dtype=dtype)
    b = np.zeros((257, 8), dtype=dtype)
    BACKENDS["py"].scatter_window_grads(ids, rows, dx, a, window, stride)
    BACKENDS["c"].scatter_window_grads(ids, rows, dx, b, window, stride)
    assert np.allclose(a, b, rtol=1e-6, atol=1e-7)


def test_selected_backend_exports():
    from pglot import kernels
    assert kernels.BACKEND in BACKENDS
    assert kernels.hist256(b"abc").sum() == 3
