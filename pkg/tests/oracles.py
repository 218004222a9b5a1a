"""Independent reference computations used by the tests.

Nothing here imports the code under test's numeric paths.
"""

import itertools
from functools import lru_cache

import numpy as np
import shapely


def shapely_scores(a, b, scale=0.0):
    """IoU / GIoU / DIoU for ltwh arrays via polygon areas (scale, scalar or per pair, buffers both boxes)."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)

    def polys(x):
        l, t, w, h = x.T
        return shapely.box(l - scale * w, t - scale * h, l + w + scale * w, t + h + scale * h)

    pa, pb = polys(a), polys(b)
    inter = shapely.area(shapely.intersection(pa, pb))
    union = shapely.area(shapely.union(pa, pb))
    iou = inter / union
    hull = shapely.envelope(shapely.union(pa, pb))
    hull_area = shapely.area(hull)
    giou = iou - (hull_area - union) / hull_area
    bounds = shapely.bounds(hull)
    diag2 = (bounds[:, 2] - bounds[:, 0]) ** 2 + (bounds[:, 3] - bounds[:, 1]) ** 2
    ca = shapely.get_coordinates(shapely.centroid(pa))
    cb = shapely.get_coordinates(shapely.centroid(pb))
    rho2 = ((ca - cb) ** 2).sum(axis=1)
    diou = iou - rho2 / diag2
    return iou, giou, diou


def best_partial_assignment(scores, threshold):
    """Exhaustive optimum over all partial matchings that only use entries >= threshold."""
    scores = np.asarray(scores, dtype=float)
    n, m = scores.shape
    rows = scores.tolist()

    @lru_cache(maxsize=None)
    def best(i, used):
        if i == n:
            return 0.0
        value = best(i + 1, used)  # row i left unmatched
        for j in range(m):
            if not used >> j & 1 and rows[i][j] >= threshold:
                value = max(value, rows[i][j] + best(i + 1, used | 1 << j))
        return value

    return best(0, 0)


def all_matchings(n, m):
    """Every partial matching of an n x m bipartite graph (for tiny sizes)."""
    for k in range(min(n, m) + 1):
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.permutations(range(m), k):
                yield list(zip(rows, cols))


def double_sum_distance(feats1, feats2):
    """Mean pairwise cosine distance, literally as a double loop."""
    total = 0.0
    for f in feats1:
        for g in feats2:
            nf = sum(x * x for x in f) ** 0.5
            ng = sum(x * x for x in g) ** 0.5
            total += 1.0 - sum(x * y for x, y in zip(f, g)) / (nf * ng)
    return total / (len(feats1) * len(feats2))
