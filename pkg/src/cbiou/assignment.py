"""Thresholded optimal bipartite matching between tracks (rows) and detections (columns)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import InputError


@dataclass
class MatchResult:
    pairs: list[tuple[int, int]] = field(default_factory=list)
    unmatched_tracks: list[int] = field(default_factory=list)
    unmatched_detections: list[int] = field(default_factory=list)


def match_optimal(scores, threshold: float) -> MatchResult:
    """Maximum-total-score assignment using only entries ``>= threshold``.

    Sub-threshold entries are zeroed before solving and any pair landing on
    one is dropped afterwards. Because scores are non-negative this yields the
    optimum over all partial assignments that respect the threshold.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise InputError(f"score matrix must be 2-D, got shape {scores.shape}")
    if not 0.0 <= threshold <= 1.0:
        raise InputError(f"threshold must lie in [0, 1], got {threshold}")
    n, m = scores.shape
    if n == 0 or m == 0:
        return MatchResult([], list(range(n)), list(range(m)))
    if not np.all(np.isfinite(scores)) or scores.min() < 0.0 or scores.max() > 1.0:
        raise InputError("score entries must be finite and within [0, 1]")

    feasible = scores >= threshold
    masked = np.where(feasible, scores, 0.0)
    if n <= m:
        cols = _backend.solve_assignment(masked)
        candidates = [(i, int(j)) for i, j in enumerate(cols) if j >= 0]
    else:
        rows = _backend.solve_assignment(np.ascontiguousarray(masked.T))
        candidates = sorted((int(i), j) for j, i in enumerate(rows) if i >= 0)
    pairs = [(i, j) for i, j in candidates if feasible[i, j]]

    track_used = np.zeros(n, dtype=bool)
    det_used = np.zeros(m, dtype=bool)
    for i, j in pairs:
        track_used[i] = True
        det_used[j] = True
    return MatchResult(
        pairs,
        np.flatnonzero(~track_used).tolist(),
        np.flatnonzero(~det_used).tolist(),
    )
