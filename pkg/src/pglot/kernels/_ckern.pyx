# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython implementations of the hot byte-level kernels.

Same contracts as ``pykern``; see that module for documentation.
"""

import numpy as np

NAME = "c"

ctypedef fused real:
    float
    double


cdef inline Py_ssize_t _bsearch(const long long[::1] arr, long long v) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = arr.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    if lo < arr.shape[0] and arr[lo] == v:
        return lo
    return -1


def hist256(data):
    cdef const unsigned char[::1] buf = data
    out = np.zeros(256, dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t i, n = buf.shape[0]
    with nogil:
        for i in range(n):
            o[buf[i]] += 1
    return out


def ngram_counts(data, codes2, codes3):
    cdef const unsigned char[::1] buf = data
    cdef const long long[::1] c2 = np.ascontiguousarray(codes2, dtype=np.int64)
    cdef const long long[::1] c3 = np.ascontiguousarray(codes3, dtype=np.int64)
    out2 = np.zeros(c2.shape[0], dtype=np.int64)
    out3 = np.zeros(c3.shape[0], dtype=np.int64)
    cdef long long[::1] o2 = out2
    cdef long long[::1] o3 = out3
    cdef Py_ssize_t i, j, n = buf.shape[0]
    cdef long long g2, g3
    cdef bint have2 = c2.shape[0] > 0, have3 = c3.shape[0] > 0
    with nogil:
        for i in range(n - 1):
            g2 = (<long long>buf[i] << 8) | buf[i + 1]
            if have2:
                j = _bsearch(c2, g2)
                if j >= 0:
                    o2[j] += 1
            if have3 and i < n - 2:
                g3 = (g2 << 8) | buf[i + 2]
                j = _bsearch(c3, g3)
                if j >= 0:
                    o3[j] += 1
    return out2, out3


def embed_windows(const unsigned short[::1] ids, real[:, ::1] emb,
                  Py_ssize_t window, Py_ssize_t stride):
    cdef Py_ssize_t length = ids.shape[0]
    cdef Py_ssize_t p = (length - window) // stride + 1
    cdef Py_ssize_t dim = emb.shape[1]
    if real is float:
        out = np.empty((p, window * dim), dtype=np.float32)
    else:
        out = np.empty((p, window * dim), dtype=np.float64)
    cdef real[:, ::1] ov = out
    cdef Py_ssize_t r, w, d, base
    with nogil:
        for r in range(p):
            base = r * stride
            for w in range(window):
                for d in range(dim):
                    ov[r, w * dim + d] = emb[ids[base + w], d]
    return out


def scatter_window_grads(const unsigned short[::1] ids, rows,
                         real[:, ::1] dxrows, real[:, ::1] demb,
                         Py_ssize_t window, Py_ssize_t stride):
    cdef const long long[::1] rv = np.ascontiguousarray(rows, dtype=np.int64)
    cdef Py_ssize_t dim = demb.shape[1]
    cdef Py_ssize_t r, w, d, base, tok
    with nogil:
        for r in range(rv.shape[0]):
            base = rv[r] * stride
            for w in range(window):
                tok = ids[base + w]
                for d in range(dim):
                    demb[tok, d] += dxrows[r, w * dim + d]
