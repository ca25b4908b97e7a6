# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dip kernel.

Identical algorithm and operation order as ``_pure`` (the AS 217 alternating
convex-minorant / concave-majorant refinement in 2n*dip units, floored at
1/(2n)), so both backends return bit-identical doubles.
"""

import numpy as np

from libc.stdlib cimport free, malloc

BACKEND_NAME = "compiled"


cdef double _dip_sorted_c(const double* x, Py_ssize_t n,
                          Py_ssize_t* mn, Py_ssize_t* mj,
                          Py_ssize_t* gcm, Py_ssize_t* lcm) noexcept nogil:
    cdef Py_ssize_t j, k, i, ig, ih, l_gcm, l_lcm, ix, iv
    cdef Py_ssize_t mnj, mnmnj, mjk, mjmjk, gcmix, lcmiv, gcmi1, lcmiv1
    cdef Py_ssize_t jb, je, jj, low, high
    cdef double d2n, d, dx, max_t, t, c, dip_l, dip_u, dip_new

    if n <= 3 or x[0] == x[n - 1]:
        return 0.5 / n

    mn[0] = 0
    for j in range(1, n):
        mn[j] = j - 1
        while True:
            mnj = mn[j]
            mnmnj = mn[mnj]
            if mnj == 0 or (x[j] - x[mnj]) * (mnj - mnmnj) < (x[mnj] - x[mnmnj]) * (j - mnj):
                break
            mn[j] = mnmnj

    mj[n - 1] = n - 1
    for k in range(n - 2, -1, -1):
        mj[k] = k + 1
        while True:
            mjk = mj[k]
            mjmjk = mj[mjk]
            if mjk == n - 1 or (x[k] - x[mjk]) * (mjk - mjmjk) < (x[mjk] - x[mjmjk]) * (k - mjk):
                break
            mj[k] = mjmjk

    low = 0
    high = n - 1
    d2n = 1.0

    while True:
        gcm[0] = high
        i = 0
        while gcm[i] > low:
            gcm[i + 1] = mn[gcm[i]]
            i += 1
        ig = i
        l_gcm = i
        ix = ig - 1

        lcm[0] = low
        i = 0
        while lcm[i] < high:
            lcm[i + 1] = mj[lcm[i]]
            i += 1
        ih = i
        l_lcm = i
        iv = 1

        d = 0.0
        if l_gcm != 1 or l_lcm != 1:
            while True:
                gcmix = gcm[ix]
                lcmiv = lcm[iv]
                if gcmix > lcmiv:
                    gcmi1 = gcm[ix + 1]
                    dx = (lcmiv - gcmi1 + 1) - (x[lcmiv] - x[gcmi1]) * (gcmix - gcmi1) / (
                        x[gcmix] - x[gcmi1]
                    )
                    iv += 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv - 1
                else:
                    lcmiv1 = lcm[iv - 1]
                    dx = (x[gcmix] - x[lcmiv1]) * (lcmiv - lcmiv1) / (x[lcmiv] - x[lcmiv1]) - (
                        gcmix - lcmiv1 - 1
                    )
                    ix -= 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv
                if ix < 0:
                    ix = 0
                if iv > l_lcm:
                    iv = l_lcm
                if gcm[ix] == lcm[iv]:
                    break

        if d < d2n:
            break

        dip_l = 0.0
        for j in range(ig, l_gcm):
            max_t = 1.0
            jb = gcm[j + 1]
            je = gcm[j]
            if je - jb > 1 and x[je] != x[jb]:
                c = (je - jb) / (x[je] - x[jb])
                for jj in range(jb, je + 1):
                    t = (jj - jb + 1) - (x[jj] - x[jb]) * c
                    if max_t < t:
                        max_t = t
            if dip_l < max_t:
                dip_l = max_t

        dip_u = 0.0
        for j in range(ih, l_lcm):
            max_t = 1.0
            jb = lcm[j]
            je = lcm[j + 1]
            if je - jb > 1 and x[je] != x[jb]:
                c = (je - jb) / (x[je] - x[jb])
                for jj in range(jb, je + 1):
                    t = (x[jj] - x[jb]) * c - (jj - jb - 1)
                    if max_t < t:
                        max_t = t
            if dip_u < max_t:
                dip_u = max_t

        dip_new = dip_u if dip_u > dip_l else dip_l
        if d2n < dip_new:
            d2n = dip_new

        if low == gcm[ig] and high == lcm[ih]:
            break
        low = gcm[ig]
        high = lcm[ih]

    return d2n / (2.0 * n)


def dip_sorted(x) -> float:
    """Dip statistic of an ascending-sorted 1-d float64 array."""
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t* work = <Py_ssize_t*> malloc(4 * n * sizeof(Py_ssize_t))
    if work == NULL:
        raise MemoryError()
    try:
        return _dip_sorted_c(&xs[0], n, work, work + n, work + 2 * n, work + 3 * n)
    finally:
        free(work)


def dip_rows(rows):
    """Dip statistic of each row of a 2-d array; rows must be sorted."""
    cdef double[:, ::1] mat = np.ascontiguousarray(rows, dtype=np.float64)
    cdef Py_ssize_t m = mat.shape[0]
    cdef Py_ssize_t n = mat.shape[1]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t* work = <Py_ssize_t*> malloc(4 * n * sizeof(Py_ssize_t))
    if work == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    try:
        with nogil:
            for i in range(m):
                out[i] = _dip_sorted_c(&mat[i, 0], n, work, work + n,
                                       work + 2 * n, work + 3 * n)
    finally:
        free(work)
    return out_arr
