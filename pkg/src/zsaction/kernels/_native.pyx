# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Semantics match zsaction.kernels.pure exactly;
only the evaluation order of floating-point reductions may differ by a
few ulps.  Matrix products are delegated to BLAS exactly as in the pure
backend; the compiled code fuses the elementwise stages (bias, GeLU,
softmax, loss, gradient scaling) that the pure backend spreads over
several temporaries, and runs the top-k selection with a bounded heap.
"""

from libc.math cimport erf, exp, log

import numpy as np

cdef double INV_SQRT2 = 0.7071067811865476
cdef double INV_SQRT_2PI = 0.3989422804014327


cdef inline double _gelu(double x) noexcept nogil:
    return 0.5 * x * (1.0 + erf(x * INV_SQRT2))


cdef inline double _gelu_grad(double x) noexcept nogil:
    return 0.5 * (1.0 + erf(x * INV_SQRT2)) + x * INV_SQRT_2PI * exp(-0.5 * x * x)


def gelu(x):
    out = np.empty_like(x)
    cdef const double[::1] src = x.ravel()
    cdef double[::1] dst = out.ravel()
    cdef Py_ssize_t i, n = src.shape[0]
    with nogil:
        for i in range(n):
            dst[i] = _gelu(src[i])
    return out


def gelu_grad(x):
    out = np.empty_like(x)
    cdef const double[::1] src = x.ravel()
    cdef double[::1] dst = out.ravel()
    cdef Py_ssize_t i, n = src.shape[0]
    with nogil:
        for i in range(n):
            dst[i] = _gelu_grad(src[i])
    return out


def softmax_rows(x):
    cdef const double[:, ::1] src = x
    cdef Py_ssize_t rows = src.shape[0], cols = src.shape[1]
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t i, j
    cdef double m, s
    with nogil:
        for i in range(rows):
            m = src[i, 0]
            for j in range(1, cols):
                if src[i, j] > m:
                    m = src[i, j]
            s = 0.0
            for j in range(cols):
                dst[i, j] = exp(src[i, j] - m)
                s += dst[i, j]
            for j in range(cols):
                dst[i, j] /= s
    return out


cdef inline bint _worse(double av, Py_ssize_t ai, double bv, Py_ssize_t bi) noexcept nogil:
    # ordering for the selection heap: smaller value is worse; on equal
    # values the higher index is worse (lower index wins ties)
    if av != bv:
        return av < bv
    return ai > bi


cdef void _sift_down(double* hv, Py_ssize_t* hi, Py_ssize_t k,
                     Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t child
    cdef double v = hv[pos]
    cdef Py_ssize_t idx = hi[pos]
    while True:
        child = 2 * pos + 1
        if child >= k:
            break
        if child + 1 < k and _worse(hv[child + 1], hi[child + 1],
                                    hv[child], hi[child]):
            child += 1
        if _worse(hv[child], hi[child], v, idx):
            hv[pos] = hv[child]
            hi[pos] = hi[child]
            pos = child
        else:
            break
    hv[pos] = v
    hi[pos] = idx


def keep_top_k_rows(x, k):
    cdef const double[:, ::1] src = x
    cdef Py_ssize_t rows = src.shape[0], cols = src.shape[1]
    cdef Py_ssize_t kk = k
    if kk >= cols:
        return x.copy()
    out = np.zeros((rows, cols), dtype=np.float64)
    cdef double[:, ::1] dst = out
    heap_v = np.empty(kk, dtype=np.float64)
    heap_i = np.empty(kk, dtype=np.intp)
    cdef double[::1] hv = heap_v
    cdef Py_ssize_t[::1] hi = heap_i
    cdef Py_ssize_t i, j, t
    with nogil:
        for i in range(rows):
            # heap of the k best seen so far, worst at the root
            for j in range(kk):
                hv[j] = src[i, j]
                hi[j] = j
            for t in range(kk // 2 - 1, -1, -1):
                _sift_down(&hv[0], &hi[0], kk, t)
            for j in range(kk, cols):
                if _worse(hv[0], hi[0], src[i, j], j):
                    hv[0] = src[i, j]
                    hi[0] = j
                    _sift_down(&hv[0], &hi[0], kk, 0)
            for t in range(kk):
                dst[i, hi[t]] = hv[t]
    return out


cdef void _bias_gelu_softmax(double[:, ::1] a, const double[::1] b,
                             double[::1] scratch) noexcept nogil:
    # in place over rows of the affine output: add bias, GeLU, softmax
    cdef Py_ssize_t rows = a.shape[0], cols = a.shape[1]
    cdef Py_ssize_t i, j
    cdef double m, s
    for i in range(rows):
        m = -1e308
        for j in range(cols):
            scratch[j] = _gelu(a[i, j] + b[j])
            if scratch[j] > m:
                m = scratch[j]
        s = 0.0
        for j in range(cols):
            a[i, j] = exp(scratch[j] - m)
            s += a[i, j]
        for j in range(cols):
            a[i, j] /= s


def forward_probs(x, weights, bias):
    affine = np.dot(x, weights)
    cdef double[:, ::1] av = affine
    cdef const double[::1] bv = bias
    scratch_arr = np.empty(affine.shape[1], dtype=np.float64)
    cdef double[::1] scratch = scratch_arr
    with nogil:
        _bias_gelu_softmax(av, bv, scratch)
    return affine


def ce_grads(x, labels, weights, bias):
    affine = np.dot(x, weights)
    cdef double[:, ::1] av = affine
    cdef const long long[::1] yv = labels
    cdef const double[::1] bv = bias
    cdef Py_ssize_t batch = av.shape[0], cols = av.shape[1]
    hidden_arr = np.empty(cols, dtype=np.float64)
    cdef double[::1] hidden = hidden_arr
    cdef Py_ssize_t i, j
    cdef double v, m, s, p, loss = 0.0
    with nogil:
        for i in range(batch):
            m = -1e308
            for j in range(cols):
                v = av[i, j] + bv[j]
                av[i, j] = v
                hidden[j] = _gelu(v)
                if hidden[j] > m:
                    m = hidden[j]
            s = 0.0
            for j in range(cols):
                s += exp(hidden[j] - m)
            loss -= hidden[yv[i]] - m - log(s)
            # (softmax - one-hot) / batch, times the GeLU derivative
            for j in range(cols):
                p = exp(hidden[j] - m) / s
                if j == yv[i]:
                    p -= 1.0
                av[i, j] = p / batch * _gelu_grad(av[i, j])
        loss /= batch
    grad_w = np.dot(x.T, affine)
    grad_b = affine.sum(axis=0)
    return loss, grad_w, grad_b
