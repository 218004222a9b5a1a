# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Semantics mirror ``cbiou._pykernels`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

DEF KIND_IOU = 0
DEF KIND_GIOU = 1
DEF KIND_DIOU = 2


cdef inline double _dmax(double a, double b) nogil:
    return a if a > b else b


cdef inline double _dmin(double a, double b) nogil:
    return a if a < b else b


def pairwise_scores(const double[:, ::1] a, const double[:, ::1] b, int kind, double scale):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double ax1, ay1, ax2, ay2, bx1, by1, bx2, by2, area_a, area_b
    cdef double l, t, w, h, iw, ih, inter, union, iou, cw, ch, hull, dx, dy
    for i in range(n):
        l = a[i, 0]; t = a[i, 1]; w = a[i, 2]; h = a[i, 3]
        ax1 = l - scale * w
        ay1 = t - scale * h
        ax2 = ax1 + w * (1.0 + 2.0 * scale)
        ay2 = ay1 + h * (1.0 + 2.0 * scale)
        area_a = (ax2 - ax1) * (ay2 - ay1)
        for j in range(m):
            l = b[j, 0]; t = b[j, 1]; w = b[j, 2]; h = b[j, 3]
            bx1 = l - scale * w
            by1 = t - scale * h
            bx2 = bx1 + w * (1.0 + 2.0 * scale)
            by2 = by1 + h * (1.0 + 2.0 * scale)
            area_b = (bx2 - bx1) * (by2 - by1)
            iw = _dmin(ax2, bx2) - _dmax(ax1, bx1)
            ih = _dmin(ay2, by2) - _dmax(ay1, by1)
            if iw < 0.0:
                iw = 0.0
            if ih < 0.0:
                ih = 0.0
            inter = iw * ih
            union = area_a + area_b - inter
            iou = inter / union
            if kind == KIND_IOU:
                out[i, j] = iou
                continue
            cw = _dmax(ax2, bx2) - _dmin(ax1, bx1)
            ch = _dmax(ay2, by2) - _dmin(ay1, by1)
            if kind == KIND_GIOU:
                hull = cw * ch
                out[i, j] = iou - (hull - union) / hull
            else:
                dx = (ax1 + ax2) * 0.5 - (bx1 + bx2) * 0.5
                dy = (ay1 + ay2) * 0.5 - (by1 + by2) * 0.5
                out[i, j] = iou - (dx * dx + dy * dy) / (cw * cw + ch * ch)
    return out_arr


def solve_assignment(const double[:, ::1] score):
    """Max-score assignment for an n x m matrix with n <= m; returns col per row."""
    cdef Py_ssize_t n = score.shape[0], m = score.shape[1]
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    result = np.full(n, -1, dtype=np.int64)
    if n == 0 or m == 0:
        return result
    u_arr = np.zeros(n + 1, dtype=np.float64)
    v_arr = np.zeros(m + 1, dtype=np.float64)
    minv_arr = np.empty(m + 1, dtype=np.float64)
    p_arr = np.zeros(m + 1, dtype=np.int64)
    way_arr = np.zeros(m + 1, dtype=np.int64)
    used_arr = np.zeros(m + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr, v = v_arr, minv = minv_arr
    cdef long long[::1] p = p_arr, way = way_arr
    cdef unsigned char[::1] used = used_arr
    cdef long long[::1] res = result
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(m + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INFINITY
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = -score[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    for j in range(1, m + 1):
        if p[j] != 0:
            res[p[j] - 1] = j - 1
    return result


def average_linkage(double[:, ::1] dist, double cut):
    """Agglomerate in place; returns the representative (smallest member) per item."""
    cdef Py_ssize_t n = dist.shape[0], i, j, k, bi, bj
    cdef double best, ni, nj, d
    parent_arr = np.arange(n, dtype=np.int64)
    size_arr = np.ones(n, dtype=np.float64)
    active_arr = np.ones(n, dtype=np.uint8)
    cdef long long[::1] parent = parent_arr
    cdef double[::1] size = size_arr
    cdef unsigned char[::1] active = active_arr
    while True:
        best = INFINITY
        bi = -1
        bj = -1
        for i in range(n):
            if not active[i]:
                continue
            for j in range(i + 1, n):
                if active[j] and dist[i, j] < best:
                    best = dist[i, j]
                    bi = i
                    bj = j
        if bi < 0 or not (best < cut):
            break
        ni = size[bi]
        nj = size[bj]
        for k in range(n):
            if active[k] and k != bi and k != bj:
                d = (ni * dist[bi, k] + nj * dist[bj, k]) / (ni + nj)
                dist[bi, k] = d
                dist[k, bi] = d
        active[bj] = 0
        parent[bj] = bi
        size[bi] = ni + nj
    for i in range(n):
        k = i
        while parent[k] != k:
            k = parent[k]
        parent[i] = k
    return parent_arr
