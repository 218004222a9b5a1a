"""Axis-aligned boxes and the overlap scores used for cross-frame affinity.

Boxes are continuous ``(left, top, width, height)`` rectangles in pixels;
area is ``width * height`` with no +1 pixel correction.

Buffer-IoU (``biou``) enlarges *both* boxes symmetrically by ``scale`` times
their own width/height on every side before taking IoU, so nearby but
disjoint boxes still get a positive score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .errors import InputError

__all__ = [
    "Box", "buffered", "iou", "biou", "giou", "diou",
    "KIND_IOU", "KIND_GIOU", "KIND_DIOU", "boxes_to_array", "score_matrix",
]

KIND_IOU = 0
KIND_GIOU = 1
KIND_DIOU = 2


@dataclass(frozen=True, slots=True)
class Box:
    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        vals = (self.left, self.top, self.width, self.height)
        if not all(math.isfinite(v) for v in vals):
            raise InputError(f"box has non-finite coordinate: {vals}")
        if not (self.width > 0 and self.height > 0):
            raise InputError(f"box extent must be positive: {vals}")

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.left + self.right) * 0.5, (self.top + self.bottom) * 0.5

    def translated(self, dx: float, dy: float) -> Box:
        return Box(self.left + dx, self.top + dy, self.width, self.height)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.left, self.top, self.width, self.height)


def _check_scale(scale: float) -> float:
    if not (math.isfinite(scale) and scale >= 0):
        raise InputError(f"buffer scale must be finite and >= 0, got {scale}")
    return float(scale)


def buffered(box: Box, scale: float) -> Box:
    """Grow ``box`` by ``scale * width`` left/right and ``scale * height`` top/bottom."""
    s = _check_scale(scale)
    return Box(
        box.left - s * box.width,
        box.top - s * box.height,
        box.width * (1.0 + 2.0 * s),
        box.height * (1.0 + 2.0 * s),
    )


def _overlap(a: Box, b: Box):
    # corner arithmetic kept identical to the kernels so scalar and matrix paths agree exactly
    ax2, ay2 = a.left + a.width, a.top + a.height
    bx2, by2 = b.left + b.width, b.top + b.height
    area_a = (ax2 - a.left) * (ay2 - a.top)
    area_b = (bx2 - b.left) * (by2 - b.top)
    iw = max(min(ax2, bx2) - max(a.left, b.left), 0.0)
    ih = max(min(ay2, by2) - max(a.top, b.top), 0.0)
    inter = iw * ih
    union = area_a + area_b - inter
    cw = max(ax2, bx2) - min(a.left, b.left)
    ch = max(ay2, by2) - min(a.top, b.top)
    return inter / union, union, cw, ch, ax2, ay2, bx2, by2


def iou(a: Box, b: Box) -> float:
    return _overlap(a, b)[0]


def biou(a: Box, b: Box, scale: float) -> float:
    return iou(buffered(a, scale), buffered(b, scale))


def giou(a: Box, b: Box) -> float:
    """Generalized IoU: IoU minus the share of the enclosing box not covered by the union."""
    v, union, cw, ch = _overlap(a, b)[:4]
    hull = cw * ch
    return v - (hull - union) / hull


def diou(a: Box, b: Box) -> float:
    """Distance IoU: IoU minus squared center distance over squared enclosing diagonal."""
    v, _, cw, ch, ax2, ay2, bx2, by2 = _overlap(a, b)
    dx = (a.left + ax2) * 0.5 - (b.left + bx2) * 0.5
    dy = (a.top + ay2) * 0.5 - (b.top + by2) * 0.5
    return v - (dx * dx + dy * dy) / (cw * cw + ch * ch)


def boxes_to_array(boxes: Iterable[Box]) -> np.ndarray:
    """Stack boxes into a C-contiguous ``(n, 4)`` float64 ltwh array."""
    arr = np.array([b.as_tuple() for b in boxes], dtype=np.float64)
    return arr.reshape(-1, 4)


def score_matrix(a: np.ndarray | Sequence[Box], b: np.ndarray | Sequence[Box],
                 kind: int = KIND_IOU, scale: float = 0.0) -> np.ndarray:
    """All-pairs scores between two box sets (rows from ``a``, columns from ``b``).

    ``kind`` selects IoU/GIoU/DIoU; ``scale`` buffers both sides first, so
    ``kind=KIND_IOU`` with ``scale > 0`` gives the BIoU matrix.
    """
    if not isinstance(a, np.ndarray):
        a = boxes_to_array(a)
    if not isinstance(b, np.ndarray):
        b = boxes_to_array(b)
    return _backend.pairwise_scores(a, b, kind, _check_scale(scale))
