# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; see ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def dead_time_filter(const cnp.int64_t[::1] candidates, cnp.int64_t dead_gates, cnp.int64_t next_free):
    cdef Py_ssize_t i, n = candidates.shape[0]
    mask_arr = np.zeros(n, dtype=np.bool_)
    cdef cnp.npy_bool[::1] mask = mask_arr
    cdef cnp.int64_t c
    for i in range(n):
        c = candidates[i]
        if c >= next_free:
            mask[i] = 1
            next_free = c + dead_gates + 1
    return mask_arr, next_free


def count_offset_matches(const cnp.int64_t[::1] a, const cnp.int64_t[::1] b, cnp.int64_t offset):
    cdef Py_ssize_t i = 0, j = 0, na = a.shape[0], nb = b.shape[0]
    cdef cnp.int64_t count = 0, x
    while i < na and j < nb:
        x = a[i] + offset
        if x == b[j]:
            count += 1
            i += 1
            j += 1
        elif x < b[j]:
            i += 1
        else:
            j += 1
    return count


def dense_gated_detector(const double[::1] uniforms, double p, cnp.int64_t dead_gates,
                         cnp.int64_t dead_remaining):
    cdef Py_ssize_t i, n = uniforms.shape[0]
    cdef cnp.int64_t fires = 0, active = 0
    for i in range(n):
        if dead_remaining > 0:
            dead_remaining -= 1
            continue
        active += 1
        if uniforms[i] < p:
            fires += 1
            dead_remaining = dead_gates
    return fires, active, dead_remaining
