"""Readers and writers for the on-disk formats.

MOT text files
    One record per line: ``frame,id,left,top,width,height,conf,x,y,z``.
    Frames are 1-based on disk and 0-based in memory. ``id`` is -1 for raw
    detections. The three trailing fields are unused and written as -1.
    The 0-based ordinal of a record among the data lines of a detection file
    is its embedding row.

Embedding tables (binary, little-endian)
    ``b"EMB1"``, uint32 row count, uint32 dim, then ``rows * dim`` float32
    values in row-major order. Row i belongs to detection line i.

Run configuration
    Flat ``key = value`` text; ``#`` starts a comment. Keys are listed in
    ``CONFIG_KEYS``; any other key is an error.
"""

from __future__ import annotations

import math
import os
import struct
from collections import defaultdict
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from .data import Detection, FrameAnnotations, Tracklet
from .errors import FormatError, InputError
from .geometry import Box
from .linker import DEFAULT_CUT, EmbeddingTable
from .tracker import TrackerConfig

EMB_MAGIC = b"EMB1"
_EMB_HEADER = struct.Struct("<4sII")


@dataclass(frozen=True, slots=True)
class MotRecord:
    frame: int  # 0-based in memory
    id: int
    box: Box
    conf: float
    line: int  # 1-based line number in the file
    row: int  # 0-based data-record ordinal


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def parse_mot(path: str | os.PathLike) -> list[MotRecord]:
    records = []
    row = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 7:
                raise FormatError(f"expected at least 7 fields, got {len(parts)}", path, lineno)
            try:
                frame = int(float(parts[0]))
                ident = int(float(parts[1]))
                l, t, w, h, conf = (float(x) for x in parts[2:7])
                for x in parts[7:]:
                    float(x)
            except ValueError as exc:
                raise FormatError(f"non-numeric field ({exc})", path, lineno) from None
            if frame < 1:
                raise FormatError(f"frame must be >= 1, got {frame}", path, lineno)
            try:
                box = Box(l, t, w, h)
            except InputError as exc:
                raise FormatError(str(exc), path, lineno) from None
            records.append(MotRecord(frame - 1, ident, box, conf, lineno, row))
            row += 1
    return records


def read_detections(path: str | os.PathLike) -> dict[int, list[Detection]]:
    """Detections grouped by 0-based frame, file order kept within each frame."""
    out: dict[int, list[Detection]] = defaultdict(list)
    for r in parse_mot(path):
        out[r.frame].append(Detection(r.frame, r.box, r.conf, r.row))
    return dict(sorted(out.items()))


def read_annotations(path: str | os.PathLike) -> dict[int, list[tuple[int, Box]]]:
    """Ground truth or tracker output as ``frame -> [(id, box)]``."""
    out: dict[int, list[tuple[int, Box]]] = defaultdict(list)
    for r in parse_mot(path):
        out[r.frame].append((r.id, r.box))
    return dict(sorted(out.items()))


def read_tracklets(path: str | os.PathLike) -> list[Tracklet]:
    """Tracker output as tracklets (embedding rows unresolved, set to -1)."""
    by_id: dict[int, list] = defaultdict(list)
    for r in parse_mot(path):
        by_id[r.id].append((r.frame, r.box, -1))
    return [Tracklet(i, sorted(e, key=lambda x: x[0])) for i, e in sorted(by_id.items())]


def _line(frame: int, ident: int, box: Box, conf: str = "1") -> str:
    return (f"{frame + 1},{ident},{_fmt(box.left)},{_fmt(box.top)},"
            f"{_fmt(box.width)},{_fmt(box.height)},{conf},-1,-1,-1\n")


def write_annotations(frames: FrameAnnotations, path: str | os.PathLike) -> None:
    """Write ``frame -> [(id, box)]`` sorted by frame then id."""
    lines = [_line(f, i, b) for f in sorted(frames) for i, b in sorted(frames[f], key=lambda p: p[0])]
    Path(path).write_text("".join(lines), encoding="utf-8")


def write_mot(tracklets: Iterable[Tracklet], path: str | os.PathLike) -> None:
    recs = sorted((f, t.id, b) for t in tracklets for f, b, _ in t.entries)
    Path(path).write_text("".join(_line(f, i, b) for f, i, b in recs), encoding="utf-8")


def write_detections(detections: Iterable[Detection], path: str | os.PathLike) -> None:
    """Detections in the given order (which defines embedding rows), id -1."""
    Path(path).write_text(
        "".join(_line(d.frame, -1, d.box, _fmt_conf(d.conf)) for d in detections),
        encoding="utf-8")


def _fmt_conf(c: float) -> str:
    return "1" if c == 1.0 else _fmt(c)


def read_embeddings(path: str | os.PathLike) -> EmbeddingTable:
    data = Path(path).read_bytes()
    if len(data) < _EMB_HEADER.size:
        raise FormatError("file shorter than header", path)
    magic, rows, dim = _EMB_HEADER.unpack_from(data)
    if magic != EMB_MAGIC:
        raise FormatError(f"bad magic {magic!r}", path)
    expected = _EMB_HEADER.size + 4 * rows * dim
    if len(data) != expected:
        raise FormatError(f"size mismatch: {rows}x{dim} needs {expected} bytes, file has {len(data)}",
                          path)
    if dim == 0:
        raise FormatError("dim must be positive", path)
    vec = np.frombuffer(data, dtype="<f4", count=rows * dim, offset=_EMB_HEADER.size)
    vec = vec.reshape(rows, dim).astype(np.float64)
    if not np.all(np.isfinite(vec)):
        raise FormatError("non-finite float in payload", path)
    return EmbeddingTable(vec)


def write_embeddings(table: EmbeddingTable | np.ndarray, path: str | os.PathLike) -> None:
    vec = table.vectors if isinstance(table, EmbeddingTable) else np.asarray(table)
    vec = np.ascontiguousarray(vec, dtype="<f4").reshape(len(vec), -1)
    with open(path, "wb") as fh:
        fh.write(_EMB_HEADER.pack(EMB_MAGIC, vec.shape[0], vec.shape[1]))
        fh.write(vec.tobytes())


def attach_rows(tracklets: list[Tracklet], detections: dict[int, list[Detection]]) -> list[Tracklet]:
    """Resolve each tracklet entry to its detection line by exact box match in the same frame.

    Identical boxes within a frame are consumed in file order. An entry with
    no matching detection is a hard error.
    """
    pools: dict[tuple[int, tuple], list[int]] = defaultdict(list)
    for frame, dets in detections.items():
        for d in dets:
            pools[(frame, _key(d.box))].append(d.row)
    for p in pools.values():
        p.reverse()
    out = []
    for t in tracklets:
        entries = []
        for frame, box, _ in t.entries:
            pool = pools.get((frame, _key(box)))
            if not pool:
                raise FormatError(
                    f"track {t.id} frame {frame + 1}: box {box.as_tuple()} has no matching detection")
            entries.append((frame, box, pool.pop()))
        out.append(Tracklet(t.id, entries))
    return out


def _key(box: Box) -> tuple:
    return tuple(_fmt(v) for v in box.as_tuple())


def check_alignment(detections: dict[int, list[Detection]], table: EmbeddingTable) -> None:
    n = sum(len(v) for v in detections.values())
    if n != len(table):
        raise FormatError(f"{n} detection lines but {len(table)} embedding rows")


@dataclass
class RunConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    cut: float = DEFAULT_CUT
    embeddings: str | None = None
    jobs: int = 1


CONFIG_KEYS = {
    "buffer_small": float,
    "buffer_large": float,
    "match_threshold": float,
    "max_age": int,
    "affinity": str,
    "coast": str,
    "cut": float,
    "embeddings": str,
    "jobs": int,
}
_TRACKER_KEYS = {f.name for f in fields(TrackerConfig)}


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError("expected 'key = value'", source, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise FormatError(f"unknown key {key!r}", source, lineno)
        if key in values:
            raise FormatError(f"duplicate key {key!r}", source, lineno)
        try:
            values[key] = CONFIG_KEYS[key](value)
        except ValueError:
            raise FormatError(f"bad value for {key!r}: {value!r}", source, lineno) from None
    tracker = TrackerConfig(**{k: v for k, v in values.items() if k in _TRACKER_KEYS})
    cut = values.get("cut", DEFAULT_CUT)
    if not (math.isfinite(cut) and cut >= 0):
        raise FormatError(f"cut must be finite and >= 0, got {cut}", source)
    jobs = values.get("jobs", 1)
    if jobs < 1:
        raise FormatError(f"jobs must be >= 1, got {jobs}", source)
    return RunConfig(tracker, cut, values.get("embeddings"), jobs)


def read_config(path: str | os.PathLike) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), str(path))


def format_config(cfg: RunConfig) -> str:
    t = cfg.tracker
    lines = [
        f"buffer_small = {t.buffer_small!r}",
        f"buffer_large = {t.buffer_large!r}",
    ]
    if t.match_threshold is not None:
        lines.append(f"match_threshold = {t.match_threshold!r}")
    lines += [
        f"max_age = {t.max_age}",
        f"affinity = {t.affinity}",
        f"coast = {t.coast}",
        f"cut = {cfg.cut!r}",
    ]
    if cfg.embeddings is not None:
        lines.append(f"embeddings = {cfg.embeddings}")
    lines.append(f"jobs = {cfg.jobs}")
    return "\n".join(lines) + "\n"
