# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel primitives: pairwise distances and fused Matern-5/2.

Same contracts as the NumPy backend, with fused single-pass loops: no
intermediate n*n temporaries, exact zeros on the diagonal, and bitwise
symmetry by construction.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

BACKEND = "native"

cdef double SQRT5 = sqrt(5.0)


def pairwise_sq_dists(X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Xv = X
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1]
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] D2 = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = Xv[i, k] - Xv[j, k]
                acc += diff * diff
            D2[i, j] = acc
            D2[j, i] = acc
    return out


def cross_sq_dists(A, B):
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    cdef const double[:, ::1] Av = A
    cdef const double[:, ::1] Bv = B
    cdef Py_ssize_t q = Av.shape[0], n = Bv.shape[0], d = Av.shape[1]
    if Bv.shape[1] != d:
        raise ValueError("dimension mismatch between row sets")
    out = np.empty((q, n), dtype=np.float64)
    cdef double[:, ::1] D2 = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(q):
        for j in range(n):
            acc = 0.0
            for k in range(d):
                diff = Av[i, k] - Bv[j, k]
                acc += diff * diff
            D2[i, j] = acc
    return out


def matern52(D2, double lengthscale, double signal_var):
    D2 = np.ascontiguousarray(D2, dtype=np.float64)
    cdef const double[:, ::1] D2v = D2
    cdef Py_ssize_t n = D2v.shape[0], m = D2v.shape[1]
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] K = out
    cdef Py_ssize_t i, j
    cdef double s, scale = SQRT5 / lengthscale
    for i in range(n):
        for j in range(m):
            s = scale * sqrt(D2v[i, j])
            K[i, j] = signal_var * (1.0 + s + s * s / 3.0) * exp(-s)
    return out


def matern52_k_rc(D2, double lengthscale, double signal_var):
    D2 = np.ascontiguousarray(D2, dtype=np.float64)
    cdef const double[:, ::1] D2v = D2
    cdef Py_ssize_t n = D2v.shape[0], m = D2v.shape[1]
    k_out = np.empty((n, m), dtype=np.float64)
    rc_out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] K = k_out
    cdef double[:, ::1] RC = rc_out
    cdef Py_ssize_t i, j
    cdef double s, e
    cdef double scale = SQRT5 / lengthscale
    cdef double rc_base = -5.0 * signal_var / (3.0 * lengthscale * lengthscale)
    for i in range(n):
        for j in range(m):
            s = scale * sqrt(D2v[i, j])
            e = exp(-s)
            K[i, j] = signal_var * (1.0 + s + s * s / 3.0) * e
            RC[i, j] = rc_base * (1.0 + s) * e
    return k_out, rc_out
