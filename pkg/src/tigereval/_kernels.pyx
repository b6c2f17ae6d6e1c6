# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementation of the hot numeric kernels.

Mirrors ``_kernels_py`` (see its docstring for the backend contract).
Reductions run in a fixed order (eight interleaved accumulators over
ascending indices, folded in a fixed tree), so results are
bit-reproducible across runs and thread counts. The heavy loops release
the GIL so instance-level scoring threads can overlap.
"""

import numpy as np

from libc.math cimport exp, log, log2, sqrt
from libc.stdlib cimport qsort

name = "compiled"


cdef int _cmp_double(const void* pa, const void* pb) noexcept nogil:
    cdef double a = (<const double*> pa)[0]
    cdef double b = (<const double*> pb)[0]
    if a < b:
        return -1
    if a > b:
        return 1
    return 0


cdef inline double _dot8(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    # Eight independent lanes over ascending indices; remainder feeds lane 0.
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef double s4 = 0.0, s5 = 0.0, s6 = 0.0, s7 = 0.0
    cdef Py_ssize_t i = 0
    while i + 8 <= n:
        s0 += a[i] * b[i]
        s1 += a[i + 1] * b[i + 1]
        s2 += a[i + 2] * b[i + 2]
        s3 += a[i + 3] * b[i + 3]
        s4 += a[i + 4] * b[i + 4]
        s5 += a[i + 5] * b[i + 5]
        s6 += a[i + 6] * b[i + 6]
        s7 += a[i + 7] * b[i + 7]
        i += 8
    while i < n:
        s0 += a[i] * b[i]
        i += 1
    return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))


cdef inline double _clip1(double x) noexcept nogil:
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


def row_norms(const double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            out[i] = sqrt(_dot8(&x[i, 0], &x[i, 0], d))
    return out_arr


def cosine_matrix(const double[:, ::1] v, const double[:, ::1] w):
    cdef Py_ssize_t n = v.shape[0], m = w.shape[0], d = v.shape[1], i, j
    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef const double[::1] nv = row_norms(v)
    cdef const double[::1] nw = row_norms(w)
    with nogil:
        for i in range(n):
            for j in range(m):
                out[i, j] = _clip1(_dot8(&v[i, 0], &w[j, 0], d) / (nv[i] * nw[j]))
    return out_arr


def positive_colnorm_sim(const double[:, ::1] scores):
    cdef Py_ssize_t n = scores.shape[0], m = scores.shape[1], i, j
    out_arr = np.empty((n, m), dtype=np.float64)
    buf_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] buf = buf_arr
    cdef double p, acc, norm
    with nogil:
        for j in range(m):
            for i in range(n):
                p = scores[i, j]
                if p < 0.0:
                    p = 0.0
                out[i, j] = p
                buf[i] = p * p
            # Canonical (sorted ascending) accumulation: the column norm is
            # then invariant under any permutation of the region rows.
            qsort(&buf[0], n, sizeof(double), _cmp_double)
            acc = 0.0
            for i in range(n):
                acc += buf[i]
            norm = sqrt(acc)
            if norm > 0.0:
                for i in range(n):
                    out[i, j] /= norm
    return out_arr


def softmax_rows(const double[:, ::1] x, double scale):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], i, j
    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double hi, acc, t
    with nogil:
        for i in range(n):
            hi = scale * x[i, 0]
            for j in range(1, m):
                t = scale * x[i, j]
                if t > hi:
                    hi = t
            acc = 0.0
            for j in range(m):
                t = exp(scale * x[i, j] - hi)
                out[i, j] = t
                acc += t
            for j in range(m):
                out[i, j] /= acc
    return out_arr


def average_rows(const double[:, ::1] weights, const double[:, ::1] w):
    cdef Py_ssize_t n = weights.shape[0], m = weights.shape[1], d = w.shape[1], i, j, t
    out_arr = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double c
    with nogil:
        for i in range(n):
            for j in range(m):
                c = weights[i, j]
                for t in range(d):
                    out[i, t] += c * w[j, t]
    return out_arr


def row_cosines(const double[:, ::1] v, const double[:, ::1] a):
    cdef Py_ssize_t n = v.shape[0], d = v.shape[1], i
    cdef Py_ssize_t zero = -1
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double na
    with nogil:
        for i in range(n):
            na = sqrt(_dot8(&a[i, 0], &a[i, 0], d))
            if na == 0.0:
                zero = i
                break
            out[i] = _clip1(
                _dot8(&v[i, 0], &a[i, 0], d)
                / (sqrt(_dot8(&v[i, 0], &v[i, 0], d)) * na)
            )
    if zero >= 0:
        return np.zeros(n, dtype=np.float64), int(zero)
    return out_arr, -1


def grounding_scores(const double[:, ::1] v, const double[:, ::1] w, double lam):
    sim = positive_colnorm_sim(cosine_matrix(v, w))
    alpha = softmax_rows(sim, lam)
    return row_cosines(v, average_rows(alpha, w))


def dcg(const double[::1] gains):
    cdef Py_ssize_t n = gains.shape[0], k
    cdef double acc = 0.0
    with nogil:
        for k in range(n):
            acc += gains[k] / log2(<double> (k + 2))
    return acc


def softmax_vec(const double[::1] x, double scale=1.0):
    cdef Py_ssize_t n = x.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double hi, acc, t
    with nogil:
        hi = scale * x[0]
        for i in range(1, n):
            t = scale * x[i]
            if t > hi:
                hi = t
        acc = 0.0
        for i in range(n):
            t = exp(scale * x[i] - hi)
            out[i] = t
            acc += t
        for i in range(n):
            out[i] /= acc
    return out_arr


cdef void _log_softmax(const double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], i
    cdef double hi = x[0], acc = 0.0
    for i in range(1, n):
        if x[i] > hi:
            hi = x[i]
    for i in range(n):
        out[i] = x[i] - hi
        acc += exp(out[i])
    acc = log(acc)
    for i in range(n):
        out[i] -= acc


def kl_from_scores(const double[::1] p_raw, const double[::1] q_raw):
    cdef Py_ssize_t n = p_raw.shape[0], i
    lp_arr = np.empty(n, dtype=np.float64)
    lq_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] lp = lp_arr
    cdef double[::1] lq = lq_arr
    cdef double acc = 0.0
    with nogil:
        _log_softmax(p_raw, lp)
        _log_softmax(q_raw, lq)
        for i in range(n):
            acc += exp(lp[i]) * (lp[i] - lq[i])
    return acc if acc > 0.0 else 0.0
