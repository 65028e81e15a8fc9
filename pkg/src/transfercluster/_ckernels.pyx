# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Euclidean distance kernels (numpy fallback: ``_pykernels``)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, sqrt

cnp.import_array()


def pairwise_distances(object x_obj, object y_obj):
    """Euclidean distance matrix of shape (len(x), len(y))."""
    cdef double[:, ::1] x = np.ascontiguousarray(x_obj, dtype=np.float64)
    cdef double[:, ::1] y = np.ascontiguousarray(y_obj, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0], d = x.shape[1]
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(d):
                diff = x[i, t] - y[j, t]
                acc += diff * diff
            o[i, j] = sqrt(acc)
    return out


def assign_nearest(object x_obj, object c_obj):
    """Index of the nearest centroid per row of ``x`` (ties: lowest index)."""
    cdef double[:, ::1] x = np.ascontiguousarray(x_obj, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(c_obj, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], m = c.shape[0], d = x.shape[1]
    idx = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] iv = idx
    cdef double[::1] dv = dist
    cdef Py_ssize_t i, j, t, best_j
    cdef double acc, diff, best
    for i in range(n):
        best = INFINITY
        best_j = 0
        for j in range(m):
            acc = 0.0
            for t in range(d):
                diff = x[i, t] - c[j, t]
                acc += diff * diff
            if acc < best:
                best = acc
                best_j = j
        iv[i] = best_j
        dv[i] = sqrt(best)
    return idx, dist


def silhouette_parts(object x_obj, object labels_obj, object counts_obj):
    """Per-sample mean intra-cluster distance ``a`` and nearest-other-cluster
    mean distance ``b``; same contract as the numpy fallback."""
    cdef double[:, ::1] x = np.ascontiguousarray(x_obj, dtype=np.float64)
    cdef cnp.int64_t[::1] labels = np.ascontiguousarray(labels_obj, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = np.ascontiguousarray(counts_obj, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], k = counts.shape[0]
    a = np.empty(n, dtype=np.float64)
    b = np.empty(n, dtype=np.float64)
    sums_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] av = a, bv = b, sums = sums_arr
    cdef Py_ssize_t i, j, t, c
    cdef cnp.int64_t li
    cdef double acc, diff, best, mean
    for i in range(n):
        for c in range(k):
            sums[c] = 0.0
        for j in range(n):
            acc = 0.0
            for t in range(d):
                diff = x[i, t] - x[j, t]
                acc += diff * diff
            sums[labels[j]] += sqrt(acc)
        li = labels[i]
        if counts[li] > 1:
            av[i] = sums[li] / (counts[li] - 1)
        else:
            av[i] = 0.0
        best = INFINITY
        for c in range(k):
            if c != li and counts[c] > 0:
                mean = sums[c] / counts[c]
                if mean < best:
                    best = mean
        bv[i] = best
    return a, b
