"""Records passed between the tracking stages.

Frame indices are 0-based everywhere in memory; only :mod:`cbiou.io`
converts to and from the 1-based on-disk convention.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import InputError
from .geometry import Box

# frame -> [(identity, box)]
FrameAnnotations = Mapping[int, Sequence[tuple[int, Box]]]


@dataclass(frozen=True, slots=True)
class Detection:
    frame: int
    box: Box
    conf: float = 1.0
    row: int = -1  # embedding row (0-based line ordinal in the detection file)


@dataclass
class Tracklet:
    """One identity fragment: ``(frame, box, embedding row)`` entries in frame order."""

    id: int
    entries: list[tuple[int, Box, int]] = field(default_factory=list)

    def __post_init__(self):
        frames = [e[0] for e in self.entries]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise InputError(f"tracklet {self.id}: frames must be strictly increasing")

    @property
    def frames(self) -> list[int]:
        return [e[0] for e in self.entries]

    @property
    def temporal_range(self) -> frozenset[int]:
        return frozenset(e[0] for e in self.entries)

    @property
    def rows(self) -> list[int]:
        return [e[2] for e in self.entries]

    def __len__(self):
        return len(self.entries)


def group_by_frame(detections: Iterable[Detection]) -> dict[int, list[Detection]]:
    out: dict[int, list[Detection]] = defaultdict(list)
    for d in detections:
        out[d.frame].append(d)
    return dict(out)


def tracklets_to_frames(tracklets: Iterable[Tracklet]) -> dict[int, list[tuple[int, Box]]]:
    """Flatten tracklets into per-frame ``(id, box)`` lists sorted by id."""
    out: dict[int, list[tuple[int, Box]]] = defaultdict(list)
    for t in tracklets:
        for frame, box, _ in t.entries:
            out[frame].append((t.id, box))
    return {f: sorted(v, key=lambda p: p[0]) for f, v in sorted(out.items())}
