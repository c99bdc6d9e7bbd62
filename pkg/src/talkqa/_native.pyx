# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rank-statistics kernels.

The O(n^2) pair scan for Kendall concordance counting is the hot loop of the
rank metrics; everything else in the package is numpy-bound. A numpy fallback
with identical semantics lives in ``talkqa.metrics._kernels_py``.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def average_ranks(cnp.float64_t[::1] values):
    """Tie-averaged 1-based ranks of a float vector."""
    cdef Py_ssize_t n = values.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    order_arr = np.argsort(np.asarray(values), kind="stable").astype(np.intp)
    cdef cnp.float64_t[::1] out = out_arr
    cdef cnp.intp_t[::1] order = order_arr
    cdef Py_ssize_t i = 0, j, k
    cdef double rank
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = 0.5 * <double>(i + j) + 1.0
        for k in range(i, j + 1):
            out[order[k]] = rank
        i = j + 1
    return out_arr


def kendall_counts(cnp.float64_t[::1] x, cnp.float64_t[::1] y):
    """Pair counts over all i<j.

    Returns (concordant, discordant, tied_x_only, tied_y_only, tied_both).
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j
    cdef long long c = 0, d = 0, tx = 0, ty = 0, txy = 0
    cdef double dx, dy
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0.0 and dy == 0.0:
                txy += 1
            elif dx == 0.0:
                tx += 1
            elif dy == 0.0:
                ty += 1
            elif (dx > 0.0) == (dy > 0.0):
                c += 1
            else:
                d += 1
    return c, d, tx, ty, txy
