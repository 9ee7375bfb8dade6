# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_pykernels`` one-to-one."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log, sqrt, cos, M_PI

cnp.import_array()


def immerkaer_abs_sum(image):
    cdef double[:, ::1] img = np.ascontiguousarray(image, dtype=np.float64)
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t i, j
    cdef double r, total = 0.0
    for i in range(1, h - 1):
        for j in range(1, w - 1):
            r = (img[i - 1, j - 1] - 2.0 * img[i - 1, j] + img[i - 1, j + 1]
                 - 2.0 * img[i, j - 1] + 4.0 * img[i, j] - 2.0 * img[i, j + 1]
                 + img[i + 1, j - 1] - 2.0 * img[i + 1, j] + img[i + 1, j + 1])
            total += fabs(r)
    return total


def run_lengths(flags):
    cdef cnp.uint8_t[::1] f = np.ascontiguousarray(flags, dtype=np.uint8)
    cdef Py_ssize_t n = f.shape[0], i
    out = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef cnp.int64_t run = 0
    for i in range(n):
        if f[i]:
            run += 1
        else:
            run = 0
        o[i] = run
    return out


def entropy_terms(p):
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t n = pv.shape[0], i
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        if pv[i] > 0.0:
            o[i] = pv[i] * log(pv[i])
    return out


def windowed_entropy(p, Py_ssize_t window):
    cdef double[::1] t = entropy_terms(p)
    cdef Py_ssize_t n = t.shape[0], i, k, lo
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double s
    for i in range(n):
        lo = i - window + 1
        if lo < 0:
            lo = 0
        s = 0.0
        for k in range(lo, i + 1):
            s += t[k]
        o[i] = s
    return out


def permutation_abs_count(cx, cy, perms, double threshold):
    cdef double[::1] x = np.ascontiguousarray(cx, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(cy, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] pm = np.ascontiguousarray(perms, dtype=np.int64)
    cdef Py_ssize_t m = pm.shape[0], n = pm.shape[1], r, i
    cdef Py_ssize_t count = 0
    cdef double s
    for r in range(m):
        s = 0.0
        for i in range(n):
            s += x[i] * y[pm[r, i]]
        if fabs(s) >= threshold:
            count += 1
    return count


def box_muller(u1, u2):
    cdef double[::1] a = np.ascontiguousarray(u1, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(u2, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = sqrt(-2.0 * log(a[i])) * cos(2.0 * M_PI * b[i])
    return out
