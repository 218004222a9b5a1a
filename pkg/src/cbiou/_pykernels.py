"""Pure-Python kernels.

Same algorithms and the same floating-point operation order as the compiled
``_ckernels`` module, so the two backends agree bit for bit.
"""

import math

import numpy as np

KIND_IOU = 0
KIND_GIOU = 1
KIND_DIOU = 2


def _corners(boxes, scale):
    l, t, w, h = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    x1 = l - scale * w
    y1 = t - scale * h
    x2 = x1 + w * (1.0 + 2.0 * scale)
    y2 = y1 + h * (1.0 + 2.0 * scale)
    return x1, y1, x2, y2


def pairwise_scores(a, b, kind, scale):
    a = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    ax1, ay1, ax2, ay2 = (c[:, None] for c in _corners(a, scale))
    bx1, by1, bx2, by2 = (c[None, :] for c in _corners(b, scale))
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    iw = np.maximum(np.minimum(ax2, bx2) - np.maximum(ax1, bx1), 0.0)
    ih = np.maximum(np.minimum(ay2, by2) - np.maximum(ay1, by1), 0.0)
    inter = iw * ih
    union = area_a + area_b - inter
    iou = inter / union
    if kind == KIND_IOU:
        return iou
    cw = np.maximum(ax2, bx2) - np.minimum(ax1, bx1)
    ch = np.maximum(ay2, by2) - np.minimum(ay1, by1)
    if kind == KIND_GIOU:
        hull = cw * ch
        return iou - (hull - union) / hull
    dx = (ax1 + ax2) * 0.5 - (bx1 + bx2) * 0.5
    dy = (ay1 + ay2) * 0.5 - (by1 + by2) * 0.5
    return iou - (dx * dx + dy * dy) / (cw * cw + ch * ch)


def solve_assignment(score):
    """Max-score assignment for an n x m matrix with n <= m; returns col per row.

    Shortest-augmenting-path Hungarian method with row/column potentials.
    """
    score = np.asarray(score, dtype=np.float64)
    n, m = score.shape
    result = np.full(n, -1, dtype=np.int64)
    if n == 0 or m == 0:
        return result
    rows = score.tolist()
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = rows[i0 - 1]
            ui = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = -row[j - 1] - ui - v[j]
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
            result[p[j] - 1] = j - 1
    return result


def average_linkage(dist, cut):
    """Agglomerate in place; returns the representative (smallest member) per item."""
    n = dist.shape[0]
    parent = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=np.float64)
    active = np.ones(n, dtype=bool)
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    while True:
        mask = upper & active[:, None] & active[None, :]
        masked = np.where(mask, dist, np.inf)
        if n < 2:
            break
        flat = int(np.argmin(masked))
        bi, bj = divmod(flat, n)
        best = masked[bi, bj]
        if not best < cut:
            break
        ni = size[bi]
        nj = size[bj]
        merged = (ni * dist[bi] + nj * dist[bj]) / (ni + nj)
        others = active.copy()
        others[bi] = others[bj] = False
        dist[bi, others] = merged[others]
        dist[others, bi] = merged[others]
        active[bj] = False
        parent[bj] = bi
        size[bi] = ni + nj
    for i in range(n):
        k = i
        while parent[k] != k:
            k = parent[k]
        parent[i] = k
    return parent
