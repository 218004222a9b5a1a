"""Cascaded Buffer-IoU online tracker and its IoU/GIoU/DIoU baselines.

Each frame runs two association tiers:

1. detections vs. tracks updated in the previous frame, scored by BIoU with
   the small buffer;
2. leftover detections vs. every remaining track (including lost ones),
   scored by BIoU with the large buffer.

Both tiers use thresholded optimal assignment. Track positions are predicted
with :mod:`cbiou.motion`. Unmatched detections start new tracks at once
(detections are assumed to be oracle boxes, so there is no probation).

The baselines keep the same two-tier recency cascade but swap the score:
plain IoU, or GIoU/DIoU mapped from [-1, 1] onto [0, 1] by ``(s + 1) / 2``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import motion
from ._parallel import pmap
from .assignment import match_optimal
from .data import Detection, FrameAnnotations, Tracklet, tracklets_to_frames
from .errors import InputError
from .geometry import KIND_DIOU, KIND_GIOU, KIND_IOU, Box, boxes_to_array, score_matrix

log = logging.getLogger(__name__)

AFFINITIES = ("biou_cascade", "iou", "giou", "diou")
COAST_MODES = ("velocity", "static")

DEFAULT_BUFFERS = (0.7, 1.0)
DEFAULT_THRESHOLD = 0.01
# rescaled GIoU/DIoU of 0.5 is a raw score of 0: admits every overlapping pair
BASELINE_THRESHOLD = 0.5

_KIND = {"biou_cascade": KIND_IOU, "iou": KIND_IOU, "giou": KIND_GIOU, "diou": KIND_DIOU}


@dataclass(frozen=True)
class TrackerConfig:
    buffer_small: float = DEFAULT_BUFFERS[0]
    buffer_large: float = DEFAULT_BUFFERS[1]
    match_threshold: float | None = None  # None: per-affinity default
    max_age: int = 60
    affinity: str = "biou_cascade"
    coast: str = "velocity"

    def __post_init__(self):
        if self.affinity not in AFFINITIES:
            raise InputError(f"affinity must be one of {AFFINITIES}, got {self.affinity!r}")
        if self.coast not in COAST_MODES:
            raise InputError(f"coast must be one of {COAST_MODES}, got {self.coast!r}")
        for name in ("buffer_small", "buffer_large"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise InputError(f"{name} must be finite and >= 0, got {v}")
        if self.buffer_small > self.buffer_large:
            raise InputError("buffer_small must not exceed buffer_large")
        if self.match_threshold is not None and not 0.0 <= self.match_threshold <= 1.0:
            raise InputError(f"match_threshold must lie in [0, 1], got {self.match_threshold}")
        if int(self.max_age) != self.max_age or self.max_age < 1:
            raise InputError(f"max_age must be an integer >= 1, got {self.max_age}")

    @property
    def threshold(self) -> float:
        if self.match_threshold is not None:
            return self.match_threshold
        return BASELINE_THRESHOLD if self.affinity in ("giou", "diou") else DEFAULT_THRESHOLD

    @property
    def tier_scales(self) -> tuple[float, float]:
        if self.affinity == "biou_cascade":
            return self.buffer_small, self.buffer_large
        return 0.0, 0.0


@dataclass
class Track:
    id: int
    motion: motion.MotionState
    history: list[tuple[int, Box, int]] = field(default_factory=list)

    @property
    def frames_since_update(self) -> int:
        return self.motion.frames_coasted

    @property
    def status(self) -> str:
        return "active" if self.frames_since_update == 0 else "lost"

    def to_tracklet(self) -> Tracklet:
        return Tracklet(self.id, list(self.history))


class CBIoUTracker:
    """Single-sequence tracker; feed frames in strictly increasing order."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self._kind = _KIND[self.config.affinity]
        self._rescale = self.config.affinity in ("giou", "diou")
        self._tracks: list[Track] = []
        self._finished: list[Track] = []
        self._ids = itertools.count(1)
        self.last_frame: int | None = None

    @property
    def tracks(self) -> list[Track]:
        return list(self._tracks)

    def step(self, frame: int, detections: Sequence[Detection]) -> list[tuple[int, Box]]:
        """Associate one frame's detections; returns ``(track id, box)`` for updated tracks."""
        if self.last_frame is not None:
            if frame <= self.last_frame:
                raise InputError(f"frame {frame} not after previous frame {self.last_frame}")
            for skipped in range(self.last_frame + 1, frame):
                self._advance(skipped, ())
        self.last_frame = frame
        return self._advance(frame, detections)

    def finalize(self) -> list[Tracklet]:
        """All tracklets, finished and still alive, ordered by id."""
        tracks = sorted(self._finished + self._tracks, key=lambda t: t.id)
        return [t.to_tracklet() for t in tracks]

    def _scores(self, pred: np.ndarray, dets: np.ndarray, scale: float) -> np.ndarray:
        s = score_matrix(pred, dets, self._kind, scale)
        if self._rescale:
            s = np.clip((s + 1.0) * 0.5, 0.0, 1.0)
        return s

    def _predicted(self, track: Track) -> Box:
        if self.config.coast == "static" and track.frames_since_update > 0:
            return track.motion.last_box
        return motion.predict(track.motion)

    def _advance(self, frame: int, detections: Sequence[Detection]) -> list[tuple[int, Box]]:
        tracks = self._tracks
        dets = list(detections)
        free = list(range(len(dets)))
        matched: dict[int, int] = {}

        if tracks and dets:
            det_arr = boxes_to_array(d.box for d in dets)
            pred_arr = boxes_to_array(self._predicted(t) for t in tracks)
            small, large = self.config.tier_scales
            recent = [i for i, t in enumerate(tracks) if t.frames_since_update == 0]
            for tier, scale in ((recent, small), (None, large)):
                if tier is None:
                    tier = [i for i in range(len(tracks)) if i not in matched]
                if not tier or not free:
                    continue
                scores = self._scores(pred_arr[tier], det_arr[free], scale)
                res = match_optimal(scores, self.config.threshold)
                for r, c in res.pairs:
                    matched[tier[r]] = free[c]
                free = [free[c] for c in res.unmatched_detections]

        out: list[tuple[int, Box]] = []
        alive: list[Track] = []
        for i, t in enumerate(tracks):
            j = matched.get(i)
            if j is not None:
                d = dets[j]
                t.motion = motion.observe(t.motion, d.box, t.frames_since_update + 1)
                t.history.append((frame, d.box, d.row))
                out.append((t.id, d.box))
                alive.append(t)
                continue
            t.motion = motion.coast(t.motion)
            if t.frames_since_update > self.config.max_age:
                self._finished.append(t)
            else:
                alive.append(t)
        for j in free:
            d = dets[j]
            t = Track(next(self._ids), motion.MotionState(d.box), [(frame, d.box, d.row)])
            alive.append(t)
            out.append((t.id, d.box))
        self._tracks = alive
        return out


def run_sequence(config: TrackerConfig | None,
                 detections_by_frame: Mapping[int, Sequence[Detection]]) -> list[Tracklet]:
    """Track one sequence end to end and return every tracklet, ordered by id."""
    tracker = CBIoUTracker(config)
    for frame in sorted(detections_by_frame):
        tracker.step(frame, detections_by_frame[frame])
    return tracker.finalize()


@dataclass(frozen=True)
class GridCell:
    buffer_small: float
    buffer_large: float
    hota: float
    deta: float
    assa: float


def _evaluate_cell(args):
    from .metrics import evaluate_sequences

    config, sequences = args
    pairs = [(gt, tracklets_to_frames(run_sequence(config, dets))) for gt, dets in sequences]
    return evaluate_sequences(pairs)


def grid_search(sequences: Sequence[tuple[FrameAnnotations, Mapping[int, Sequence[Detection]]]],
                buffer_grid: Iterable[tuple[float, float]],
                threshold: float = DEFAULT_THRESHOLD,
                base: TrackerConfig | None = None,
                jobs: int = 1) -> tuple[tuple[float, float], list[GridCell]]:
    """Score every ``(small, large)`` buffer pair by pooled HOTA.

    Returns the best pair (first in grid order on ties) and the full table.
    """
    grid = [(float(s), float(l)) for s, l in buffer_grid]
    if not grid:
        raise InputError("buffer grid is empty")
    if not sequences:
        raise InputError("grid search needs at least one sequence")
    base = base or TrackerConfig()
    configs = [replace(base, buffer_small=s, buffer_large=l, match_threshold=threshold,
                       affinity="biou_cascade") for s, l in grid]
    reports = pmap(_evaluate_cell, [(c, sequences) for c in configs], jobs)
    table = [GridCell(s, l, r.hota, r.deta, r.assa) for (s, l), r in zip(grid, reports)]
    best = max(range(len(table)), key=lambda k: (table[k].hota, -k))
    log.info("grid search best cell %s with HOTA %.4f", grid[best], table[best].hota)
    return grid[best], table
