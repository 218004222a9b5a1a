"""Cascaded Buffer-IoU multi-object tracking with offline appearance linking."""

from . import _backend
from .assignment import MatchResult, match_optimal
from .data import Detection, Tracklet
from .errors import FormatError, InputError
from .geometry import Box, biou, buffered, diou, giou, iou
from .linker import EmbeddingTable, build_distance_matrix, cluster, link, merge_tracklets, tracklet_distance
from .metrics import MetricReport, evaluate, evaluate_sequences
from .tracker import CBIoUTracker, TrackerConfig, grid_search, run_sequence

__version__ = "0.1.0"


def backend() -> str:
    """Name of the active kernel backend (``"compiled"`` or ``"python"``)."""
    return _backend.name


__all__ = [
    "Box", "iou", "biou", "giou", "diou", "buffered",
    "match_optimal", "MatchResult",
    "Detection", "Tracklet", "EmbeddingTable",
    "CBIoUTracker", "TrackerConfig", "run_sequence", "grid_search",
    "tracklet_distance", "build_distance_matrix", "cluster", "merge_tracklets", "link",
    "MetricReport", "evaluate", "evaluate_sequences",
    "InputError", "FormatError", "backend",
]
