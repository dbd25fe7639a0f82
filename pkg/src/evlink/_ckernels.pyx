# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: float32 storage, float64 accumulation.

Mirrors evlink._kernels_numpy; see that module for the shared contract.
"""

from libc.math cimport sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def affine_fwd(const float[:, ::1] x, const float[:, ::1] w,
               const float[::1] b):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d_in = x.shape[1]
    cdef Py_ssize_t d_out = w.shape[0]
    out = np.empty((n, d_out), dtype=np.float32)
    cdef float[:, ::1] y = out
    cdef Py_ssize_t r, o, i
    cdef double acc
    for r in range(n):
        for o in range(d_out):
            acc = <double>b[o]
            for i in range(d_in):
                acc += <double>x[r, i] * <double>w[o, i]
            y[r, o] = <float>acc
    return out


def affine_bwd(const float[:, ::1] x, const float[:, ::1] w,
               const float[:, ::1] dy):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d_in = x.shape[1]
    cdef Py_ssize_t d_out = w.shape[0]
    dx_arr = np.empty((n, d_in), dtype=np.float32)
    dw_arr = np.empty((d_out, d_in), dtype=np.float32)
    db_arr = np.empty(d_out, dtype=np.float32)
    cdef float[:, ::1] dx = dx_arr
    cdef float[:, ::1] dw = dw_arr
    cdef float[::1] db = db_arr
    cdef Py_ssize_t r, o, i
    cdef double acc
    for r in range(n):
        for i in range(d_in):
            acc = 0.0
            for o in range(d_out):
                acc += <double>dy[r, o] * <double>w[o, i]
            dx[r, i] = <float>acc
    for o in range(d_out):
        for i in range(d_in):
            acc = 0.0
            for r in range(n):
                acc += <double>dy[r, o] * <double>x[r, i]
            dw[o, i] = <float>acc
    for o in range(d_out):
        acc = 0.0
        for r in range(n):
            acc += <double>dy[r, o]
        db[o] = <float>acc
    return dx_arr, dw_arr, db_arr


def adamw_update(float[::1] p, const float[::1] g, float[::1] m, float[::1] v,
                 double lr, double beta1, double beta2, double eps,
                 double weight_decay, double bc1, double bc2):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t i
    cdef double gi, mi, vi, mhat, vhat, pi
    for i in range(n):
        gi = <double>g[i]
        mi = beta1 * <double>m[i] + (1.0 - beta1) * gi
        vi = beta2 * <double>v[i] + (1.0 - beta2) * (gi * gi)
        m[i] = <float>mi
        v[i] = <float>vi
        # Read the rounded float32 moments back, matching the fallback.
        mhat = <double>m[i] / bc1
        vhat = <double>v[i] / bc2
        pi = <double>p[i]
        pi -= lr * (mhat / (sqrt(vhat) + eps) + weight_decay * pi)
        p[i] = <float>pi


def rowwise_dot_norms(const float[:, ::1] a, const float[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t d = a.shape[1]
    dot_arr = np.empty(n, dtype=np.float64)
    na_arr = np.empty(n, dtype=np.float64)
    nb_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] dot = dot_arr
    cdef double[::1] na = na_arr
    cdef double[::1] nb = nb_arr
    cdef Py_ssize_t r, i
    cdef double sd, sa, sb, ai, bi
    for r in range(n):
        sd = 0.0
        sa = 0.0
        sb = 0.0
        for i in range(d):
            ai = <double>a[r, i]
            bi = <double>b[r, i]
            sd += ai * bi
            sa += ai * ai
            sb += bi * bi
        dot[r] = sd
        na[r] = sa
        nb[r] = sb
    return dot_arr, na_arr, nb_arr
