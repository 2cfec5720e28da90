# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures and results match localscale._pure exactly."""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def directed_hausdorff(const double[:, ::1] a, const double[:, ::1] b):
    """max over rows of ``a`` of the distance to the nearest row of ``b``.

    Uses the early-break scan: the inner loop stops once a row of ``b`` is
    closer than the running maximum, which cannot change the result.
    """
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], dim = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double cmax = 0.0, cmin, d, diff
    if na == 0 or nb == 0:
        raise ValueError("empty point set")
    for i in range(na):
        cmin = 1e300
        for j in range(nb):
            d = 0.0
            for k in range(dim):
                diff = a[i, k] - b[j, k]
                d = d + diff * diff
            if d < cmin:
                cmin = d
                if cmin < cmax:
                    break
        if cmin > cmax:
            cmax = cmin
    return sqrt(cmax)


def rasterize_boxes(const cnp.int64_t[:, ::1] lo, const cnp.int64_t[:, ::1] hi):
    """All integer points of the index boxes ``[lo_i, hi_i]`` (inclusive), stacked."""
    cdef Py_ssize_t n = lo.shape[0], dim = lo.shape[1]
    cdef Py_ssize_t i, k, total = 0, count, row = 0
    if dim > 3:
        raise ValueError("dimension > 3 not supported")
    for i in range(n):
        count = 1
        for k in range(dim):
            count *= hi[i, k] - lo[i, k] + 1
        total += count
    out_arr = np.empty((total, dim), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef cnp.int64_t x, y, z
    for i in range(n):
        if dim == 1:
            for x in range(lo[i, 0], hi[i, 0] + 1):
                out[row, 0] = x
                row += 1
        elif dim == 2:
            for x in range(lo[i, 0], hi[i, 0] + 1):
                for y in range(lo[i, 1], hi[i, 1] + 1):
                    out[row, 0] = x
                    out[row, 1] = y
                    row += 1
        else:
            for x in range(lo[i, 0], hi[i, 0] + 1):
                for y in range(lo[i, 1], hi[i, 1] + 1):
                    for z in range(lo[i, 2], hi[i, 2] + 1):
                        out[row, 0] = x
                        out[row, 1] = y
                        out[row, 2] = z
                        row += 1
    return out_arr


def merge_intervals(const double[::1] starts, const double[::1] ends):
    """Merge closed intervals already sorted by start; touching intervals are joined."""
    cdef Py_ssize_t n = starts.shape[0], i, m = 0
    out_s = np.empty(n, dtype=np.float64)
    out_e = np.empty(n, dtype=np.float64)
    cdef double[::1] s = out_s
    cdef double[::1] e = out_e
    if n == 0:
        return out_s, out_e
    s[0] = starts[0]
    e[0] = ends[0]
    for i in range(1, n):
        if starts[i] <= e[m]:
            if ends[i] > e[m]:
                e[m] = ends[i]
        else:
            m += 1
            s[m] = starts[i]
            e[m] = ends[i]
    return out_s[:m + 1].copy(), out_e[:m + 1].copy()
