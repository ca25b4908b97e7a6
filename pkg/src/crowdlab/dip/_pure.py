"""Pure-Python dip kernel.

Computes the Hartigan & Hartigan (1985) dip statistic of a sorted sample:
the smallest sup-norm distance between the empirical CDF and any unimodal
CDF, floored at 1/(2n).  The algorithm is the classic alternating
greatest-convex-minorant / least-concave-majorant refinement of the modal
interval (AS 217), working in units of 2n*dip so all slope comparisons are
exact cross-multiplications.

This module is the fallback backend; ``_core`` is the compiled twin with
identical operation order, so both produce bit-identical results.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _dip_sorted_list(x: list[float], n: int) -> float:
    # Degenerate samples: the floor 1/(2n) is the defined value.  For n in
    # {2, 3} the floor is also the exact statistic for non-constant data.
    if n <= 3 or x[0] == x[n - 1]:
        return 0.5 / n

    # mn[j]: start of the GCM segment ending at j, found by merging segments
    # while the slope to the left does not decrease (cross-multiplied).
    mn = [0] * n
    for j in range(1, n):
        mn[j] = j - 1
        while True:
            mnj = mn[j]
            mnmnj = mn[mnj]
            if mnj == 0 or (x[j] - x[mnj]) * (mnj - mnmnj) < (x[mnj] - x[mnmnj]) * (j - mnj):
                break
            mn[j] = mnmnj

    # mj[k]: end of the LCM segment starting at k (mirror of mn).
    mj = [0] * n
    mj[n - 1] = n - 1
    for k in range(n - 2, -1, -1):
        mj[k] = k + 1
        while True:
            mjk = mj[k]
            mjmjk = mj[mjk]
            if mjk == n - 1 or (x[k] - x[mjk]) * (mjk - mjmjk) < (x[mjk] - x[mjmjk]) * (k - mjk):
                break
            mj[k] = mjmjk

    gcm = [0] * n
    lcm = [0] * n
    low = 0
    high = n - 1
    d2n = 1.0  # 2n * dip, floored at 1 so dip >= 1/(2n)

    while True:
        # GCM touchpoints of the current interval, from high down to low.
        gcm[0] = high
        i = 0
        while gcm[i] > low:
            gcm[i + 1] = mn[gcm[i]]
            i += 1
        ig = i
        l_gcm = i
        ix = ig - 1

        # LCM touchpoints, from low up to high.
        lcm[0] = low
        i = 0
        while lcm[i] < high:
            lcm[i + 1] = mj[lcm[i]]
            i += 1
        ih = i
        l_lcm = i
        iv = 1

        # Largest distance between the two hulls, walking both in step.
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

        # Deviation of the ECDF from the convex minorant left of the modal
        # interval ...
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

        # ... and from the concave majorant right of it.
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
    xs = np.asarray(x, dtype=np.float64)
    return _dip_sorted_list(xs.tolist(), xs.shape[0])


def dip_rows(rows) -> np.ndarray:
    """Dip statistic of each row of a 2-d array; rows must be sorted."""
    mat = np.asarray(rows, dtype=np.float64)
    m, n = mat.shape
    out = np.empty(m, dtype=np.float64)
    data = mat.tolist()
    for i in range(m):
        out[i] = _dip_sorted_list(data[i], n)
    return out
