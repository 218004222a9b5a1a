"""Offline linking of short-term tracklets into long-term identities.

Two tracklets are at infinite distance when their frame sets intersect (one
identity cannot be in two places at once). Otherwise the distance is the mean
cosine distance over all cross pairs of their appearance features,

    D = 1/(N1*N2) * sum_i sum_j (1 - <f_i, f_j> / (|f_i| |f_j|)),

which equals ``1 - <m1, m2>`` where ``mk`` is the mean of tracklet k's
L2-normalised features; the matrix is built from that O(N1 + N2) form.

Tracklets are then grouped by average-linkage agglomeration, merging while
the closest pair of clusters is below the cut. An infinite pair makes the
average infinite, so overlapping tracklets never end up together.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from . import _backend
from .data import Tracklet
from .errors import InputError

DEFAULT_CUT = 0.15


@dataclass
class EmbeddingTable:
    """Per-detection appearance vectors; row i belongs to detection line i."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise InputError(f"embedding table must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("embedding table contains non-finite values")
        self.vectors = v

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]

    def normalized_rows(self, rows: Sequence[int]) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size and (rows.min() < 0 or rows.max() >= len(self)):
            raise InputError(f"embedding row out of range (table has {len(self)} rows)")
        feats = self.vectors[rows]
        norms = np.linalg.norm(feats, axis=1)
        if np.any(norms == 0):
            raise InputError("zero-norm feature vector")
        return feats / norms[:, None]


def _mean_direction(t: Tracklet, emb: EmbeddingTable) -> np.ndarray:
    if not len(t):
        raise InputError(f"tracklet {t.id} is empty")
    return emb.normalized_rows(t.rows).mean(axis=0)


def tracklet_distance(t1: Tracklet, t2: Tracklet, emb: EmbeddingTable) -> float:
    """Appearance distance between two tracklets; ``inf`` when they share a frame."""
    if not t1.temporal_range.isdisjoint(t2.temporal_range):
        return float("inf")
    d = 1.0 - float(_mean_direction(t1, emb) @ _mean_direction(t2, emb))
    return min(max(d, 0.0), 2.0)


def _overlaps(tracklets: Sequence[Tracklet]) -> np.ndarray:
    n = len(tracklets)
    rows = np.repeat(np.arange(n), [len(t) for t in tracklets])
    cols = np.fromiter(itertools.chain.from_iterable(t.frames for t in tracklets), dtype=np.int64,
                       count=rows.size)
    if cols.size:
        cols = cols - cols.min()
    occ = sparse.csr_matrix((np.ones(rows.size), (rows, cols)),
                            shape=(n, int(cols.max()) + 1 if cols.size else 0))
    return (occ @ occ.T).toarray() > 0


def build_distance_matrix(tracklets: Sequence[Tracklet], emb: EmbeddingTable) -> np.ndarray:
    """Symmetric ``n x n`` distance matrix with zero diagonal."""
    n = len(tracklets)
    if n == 0:
        return np.zeros((0, 0))
    means = np.stack([_mean_direction(t, emb) for t in tracklets])
    dist = np.clip(1.0 - means @ means.T, 0.0, 2.0)
    dist = np.minimum(dist, dist.T)  # exact symmetry
    dist[_overlaps(tracklets)] = np.inf
    np.fill_diagonal(dist, 0.0)
    return dist


def cluster(dist: np.ndarray, cut: float = DEFAULT_CUT) -> np.ndarray:
    """Average-linkage clustering cut at ``cut``.

    Returns a cluster label per tracklet; labels are numbered 0, 1, ... in
    order of each cluster's smallest member index. Equal merge distances are
    resolved in favour of the pair with the smallest member indices.
    """
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise InputError(f"distance matrix must be square, got shape {dist.shape}")
    if not cut > 0:
        # nothing is closer than a non-positive cut
        return np.arange(dist.shape[0], dtype=np.int64)
    reps = _backend.average_linkage(dist, cut)
    _, labels = np.unique(reps, return_inverse=True)
    return labels.astype(np.int64)


def merge_tracklets(tracklets: Sequence[Tracklet], labels: Sequence[int]) -> list[Tracklet]:
    """Concatenate each cluster's entries in frame order under a fresh id (1, 2, ...)."""
    if len(labels) != len(tracklets):
        raise InputError("one label per tracklet required")
    groups: dict[int, list[Tracklet]] = {}
    for t, lab in zip(tracklets, labels):
        groups.setdefault(int(lab), []).append(t)
    merged = []
    for new_id, members in enumerate(groups.values(), start=1):
        entries = sorted(itertools.chain.from_iterable(t.entries for t in members),
                         key=lambda e: e[0])
        frames = [e[0] for e in entries]
        if len(set(frames)) != len(frames):
            raise RuntimeError(f"cluster {new_id} holds temporally overlapping tracklets")
        merged.append(Tracklet(new_id, entries))
    return merged


def link(tracklets: Sequence[Tracklet], emb: EmbeddingTable, cut: float = DEFAULT_CUT):
    """Distance matrix, clustering and merge in one call.

    Returns ``(merged tracklets, distance matrix before, distance matrix after)``.
    """
    before = build_distance_matrix(tracklets, emb)
    merged = merge_tracklets(tracklets, cluster(before, cut))
    after = build_distance_matrix(merged, emb)
    return merged, before, after
