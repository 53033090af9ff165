# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner-loop kernels.

Mirrors the contract of ``spdhg._kernels_py``; one pass per kernel, no
temporaries. Selected at import time by ``spdhg.backend``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


def gradient_forward(cnp.complex128_t[:, ::1] x):
    cdef Py_ssize_t r = x.shape[0]
    cdef Py_ssize_t c = x.shape[1]
    out_arr = np.zeros((r, c, 2), dtype=np.complex128)
    cdef cnp.complex128_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j
    for i in range(r):
        for j in range(c):
            if i < r - 1:
                out[i, j, 0] = x[i + 1, j] - x[i, j]
            if j < c - 1:
                out[i, j, 1] = x[i, j + 1] - x[i, j]
    return out_arr


def gradient_adjoint(cnp.complex128_t[:, :, ::1] y):
    cdef Py_ssize_t r = y.shape[0]
    cdef Py_ssize_t c = y.shape[1]
    out_arr = np.zeros((r, c), dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    for i in range(r):
        for j in range(c):
            if i > 0:
                out[i, j] = out[i, j] + y[i - 1, j, 0]
            if i < r - 1:
                out[i, j] = out[i, j] - y[i, j, 0]
            if j > 0:
                out[i, j] = out[i, j] + y[i, j - 1, 1]
            if j < c - 1:
                out[i, j] = out[i, j] - y[i, j, 1]
    return out_arr


def group_project(cnp.float64_t[::1] v, double radius, Py_ssize_t group_size):
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t ngroups = n // group_size
    out_arr = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t g, k, base
    cdef double nrm, scale
    for g in range(ngroups):
        base = g * group_size
        nrm = 0.0
        for k in range(group_size):
            nrm += v[base + k] * v[base + k]
        nrm = sqrt(nrm)
        scale = 1.0 if nrm <= radius else radius / nrm
        for k in range(group_size):
            out[base + k] = v[base + k] * scale
    return out_arr


def group_norms(cnp.float64_t[::1] v, Py_ssize_t group_size):
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t ngroups = n // group_size
    out_arr = np.empty(ngroups, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t g, k, base
    cdef double nrm
    for g in range(ngroups):
        base = g * group_size
        nrm = 0.0
        for k in range(group_size):
            nrm += v[base + k] * v[base + k]
        out[g] = sqrt(nrm)
    return out_arr


def sqdist_dual_prox(v, b, double sigma):
    # one fused pass over the interleaved (re, im) view
    v_arr = np.ascontiguousarray(v, dtype=np.complex128).ravel()
    b_arr = np.ascontiguousarray(b, dtype=np.complex128).ravel()
    cdef cnp.float64_t[::1] vv = v_arr.view(np.float64)
    cdef cnp.float64_t[::1] bb = b_arr.view(np.float64)
    cdef Py_ssize_t n = vv.shape[0]
    out_arr = np.empty(n // 2, dtype=np.complex128)
    cdef cnp.float64_t[::1] out = out_arr.view(np.float64)
    cdef double scale = 1.0 / (1.0 + 0.5 * sigma)
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = (vv[i] - sigma * bb[i]) * scale
    return out_arr.reshape(np.shape(v))
