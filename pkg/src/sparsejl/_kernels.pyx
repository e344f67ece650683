# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics are defined by ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int8_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t DERIVE_SALT = 0xD1B54A32D192ED03ULL


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _bounded(uint64_t word, uint64_t bound) noexcept nogil:
    cdef uint64_t hi = word >> 32
    cdef uint64_t lo = word & 0xFFFFFFFFULL
    return (hi * bound + ((lo * bound) >> 32)) >> 32


def mix64(z):
    cdef cnp.ndarray[uint64_t, ndim=1] a = np.ascontiguousarray(np.atleast_1d(z), dtype=np.uint64)
    cdef cnp.ndarray[uint64_t, ndim=1] out = np.empty_like(a)
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        out[i] = _mix(a[i])
    return out


def sample_columns(uint64_t seed, Py_ssize_t col_start, Py_ssize_t col_stop,
                   Py_ssize_t s, Py_ssize_t block_size):
    cdef Py_ssize_t n = col_stop - col_start
    cdef cnp.ndarray[int64_t, ndim=2] rows = np.empty((n, s), dtype=np.int64)
    cdef cnp.ndarray[int8_t, ndim=2] signs = np.empty((n, s), dtype=np.int8)
    cdef int64_t[:, ::1] rv = rows
    cdef int8_t[:, ::1] sv = signs
    cdef uint64_t base = _mix(seed + GOLDEN)
    cdef uint64_t colkey, bs = <uint64_t>block_size
    cdef Py_ssize_t j, b
    with nogil:
        for j in range(n):
            colkey = _mix(base + (<uint64_t>(col_start + j) + 1) * GOLDEN)
            for b in range(s):
                rv[j, b] = <int64_t>_bounded(_mix(colkey + (2 * <uint64_t>b + 1) * GOLDEN), bs) + b * block_size
                sv[j, b] = 1 if (_mix(colkey + (2 * <uint64_t>b + 2) * GOLDEN) >> 63) == 0 else -1
    return rows, signs


def derive_seed(uint64_t seed, uint64_t counter):
    cdef uint64_t base = _mix(seed ^ DERIVE_SALT)
    return int(_mix(base + (counter + 1) * GOLDEN))


def scatter_csr(const int64_t[::1] indptr, const int64_t[::1] indices,
                const double[::1] data, const int64_t[:, ::1] rows,
                const int8_t[:, ::1] signs, double scale, double[:, ::1] out):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t s = rows.shape[1]
    cdef Py_ssize_t i, p, b, j
    cdef double v
    with nogil:
        for i in range(n):
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                v = data[p] * scale
                for b in range(s):
                    if signs[j, b] > 0:
                        out[i, rows[j, b]] += v
                    else:
                        out[i, rows[j, b]] += -v
    return np.asarray(out)


def scatter_dense(const double[:, ::1] X, const int64_t[:, ::1] rows,
                  const int8_t[:, ::1] signs, double scale, double[:, ::1] out):
    cdef Py_ssize_t d = X.shape[0], c = X.shape[1], s = rows.shape[1]
    cdef Py_ssize_t j, b, k, r
    cdef double v
    with nogil:
        for j in range(d):
            for b in range(s):
                r = rows[j, b]
                if signs[j, b] > 0:
                    for k in range(c):
                        out[r, k] += X[j, k] * scale
                else:
                    for k in range(c):
                        v = X[j, k] * scale
                        out[r, k] += -v
    return np.asarray(out)


def pair_sq_dists(const double[:, ::1] Y, const int64_t[::1] I, const int64_t[::1] J):
    cdef Py_ssize_t n = I.shape[0], m = Y.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t k, c
    cdef double acc, t
    with nogil:
        for k in range(n):
            acc = 0.0
            for c in range(m):
                t = Y[I[k], c] - Y[J[k], c]
                acc += t * t
            ov[k] = acc
    return out
