# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for maximum-likelihood detection and bit counting."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


def nearest(double complex[:, ::1] z, double complex[:, ::1] points):
    """Index of the closest row of ``points`` for every row of ``z``.

    Squared Euclidean distance; ties go to the lowest index.
    """
    cdef Py_ssize_t n = z.shape[0], h = points.shape[0], dim = z.shape[1]
    if points.shape[1] != dim:
        raise ValueError("z and points disagree on dimension")
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] res = out
    cdef Py_ssize_t i, k, d, best
    cdef double dist, best_dist, dr, di
    with nogil:
        for i in range(n):
            best = 0
            best_dist = 1e300
            for k in range(h):
                dist = 0.0
                for d in range(dim):
                    dr = z[i, d].real - points[k, d].real
                    di = z[i, d].imag - points[k, d].imag
                    dist = dist + (dr * dr + di * di)
                    if dist >= best_dist:
                        break
                if dist < best_dist:
                    best_dist = dist
                    best = k
            res[i] = best
    return out


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def bit_errors(const int64_t[::1] a, const int64_t[::1] b):
    """Total number of differing bits between two label arrays."""
    if a.shape[0] != b.shape[0]:
        raise ValueError("label arrays differ in length")
    cdef Py_ssize_t i
    cdef int64_t total = 0
    with nogil:
        for i in range(a.shape[0]):
            total += __builtin_popcountll(<unsigned long long>(a[i] ^ b[i]))
    return int(total)
