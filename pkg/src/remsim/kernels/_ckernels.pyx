# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-event kernels with the same signatures as ``_pykernels``.

``softmax`` and ``weighted_gram`` are re-exported from the numpy module:
vectorized exp and BLAS beat scalar loops there (see
benchmarks/bench_kernels.py).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fabs

cnp.import_array()

from ._pykernels import softmax, weighted_gram  # noqa: F401

cdef double SD_EPS = 1e-12


def standardize_columns(double[:, :] X, cols):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i, c
    cdef double mean, sd, d
    if n == 0:
        return
    for c in cols:
        mean = 0.0
        for i in range(n):
            mean += X[i, c]
        mean /= n
        sd = 0.0
        for i in range(n):
            d = X[i, c] - mean
            sd += d * d
        sd = sqrt(sd / n)
        if sd <= SD_EPS * (fabs(mean) + 1.0):
            for i in range(n):
                X[i, c] = 0.0
        else:
            for i in range(n):
                X[i, c] = (X[i, c] - mean) / sd


def sample_logits(const double[::1] eta, double u):
    cdef Py_ssize_t n = eta.shape[0]
    cdef Py_ssize_t k
    cdef double m = eta[0]
    cdef double total = 0.0
    cdef double target, acc
    buf = np.empty(n)
    cdef double[::1] e = buf
    for k in range(1, n):
        if eta[k] > m:
            m = eta[k]
    for k in range(n):
        e[k] = exp(eta[k] - m)
        total += e[k]
    target = u * total
    acc = 0.0
    for k in range(n):
        acc += e[k]
        if acc > target:
            return k, m + log(total)
    return n - 1, m + log(total)


cdef inline double _min(double x, double y) nogil:
    return x if x < y else y


def twopath_update(double[:, ::1] W, otp, osp, isp, Py_ssize_t a, Py_ssize_t b,
                   double old, double new):
    cdef Py_ssize_t n = W.shape[0]
    cdef Py_ssize_t h
    cdef double d
    cdef double[:, ::1] M
    if otp is not None:
        M = otp
        for h in range(n):
            M[a, h] += _min(new, W[b, h]) - _min(old, W[b, h])
        for h in range(n):
            M[h, b] += _min(W[h, a], new) - _min(W[h, a], old)
    if osp is not None:
        M = osp
        for h in range(n):
            if h == a:
                continue
            d = _min(new, W[h, b]) - _min(old, W[h, b])
            M[a, h] += d
            M[h, a] += d
    if isp is not None:
        M = isp
        for h in range(n):
            if h == b:
                continue
            d = _min(new, W[a, h]) - _min(old, W[a, h])
            M[b, h] += d
            M[h, b] += d
