# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled noncrossing-partition kernels; same API as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    CMAXN = 16

MAX_N = CMAXN

cdef Py_ssize_t _catalan(int n):
    cdef Py_ssize_t c = 1
    cdef int k
    for k in range(n):
        c = c * 2 * (2 * k + 1) // (k + 2)
    return c


cdef void _dfs(int i, int n, signed char* labels, int* stack, int sp, int nb,
               signed char[:, ::1] out, Py_ssize_t* row) nogil:
    cdef int local[CMAXN]
    cdef int d, j
    if i == n:
        for j in range(n):
            out[row[0], j] = labels[j]
        row[0] += 1
        return
    for j in range(sp):
        local[j] = stack[j]
    for d in range(sp):
        labels[i] = <signed char>local[d]
        _dfs(i + 1, n, labels, local, d + 1, nb, out, row)
    labels[i] = <signed char>nb
    local[sp] = nb
    _dfs(i + 1, n, labels, local, sp + 1, nb + 1, out, row)


def nc_labels(int n):
    if n < 0 or n > CMAXN:
        raise ValueError(f"n must be in [0, {CMAXN}], got {n}")
    cdef Py_ssize_t count = _catalan(n)
    out_arr = np.zeros((count, n), dtype=np.int8)
    cdef signed char[:, ::1] out = out_arr
    cdef signed char labels[CMAXN]
    cdef int stack[CMAXN]
    cdef Py_ssize_t row = 0
    if n == 0:
        return out_arr.reshape(1, 0)
    with nogil:
        _dfs(0, n, labels, stack, 0, 0, out, &row)
    return out_arr


def noncrossing_mask(labels):
    cdef cnp.int64_t[:, ::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t rows = lab.shape[0], n = lab.shape[1]
    out_arr = np.ones(rows, dtype=np.bool_)
    cdef cnp.npy_bool[::1] out = out_arr
    cdef Py_ssize_t r, a, b, c, d
    cdef bint ok
    with nogil:
        for r in range(rows):
            ok = True
            for a in range(n):
                if not ok:
                    break
                for c in range(a + 2, n):
                    if not ok:
                        break
                    if lab[r, a] != lab[r, c]:
                        continue
                    for b in range(a + 1, c):
                        if not ok:
                            break
                        if lab[r, b] == lab[r, a]:
                            continue
                        for d in range(c + 1, n):
                            if lab[r, d] == lab[r, b]:
                                ok = False
                                break
            out[r] = ok
    return out_arr


def monochrome_mask(labels, colors):
    cdef cnp.int64_t[:, ::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef cnp.int64_t[::1] col = np.ascontiguousarray(colors, dtype=np.int64)
    cdef Py_ssize_t rows = lab.shape[0], n = lab.shape[1]
    out_arr = np.ones(rows, dtype=np.bool_)
    cdef cnp.npy_bool[::1] out = out_arr
    cdef cnp.int64_t seen[CMAXN]
    cdef Py_ssize_t r, i, k
    with nogil:
        for r in range(rows):
            for k in range(n):
                seen[k] = -1
            for i in range(n):
                k = lab[r, i]
                if seen[k] == -1:
                    seen[k] = col[i]
                elif seen[k] != col[i]:
                    out[r] = False
                    break
    return out_arr
