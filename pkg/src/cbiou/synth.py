"""Deterministic synthetic scenes: ground truth, oracle detections, embeddings.

Randomness comes from the Philox-4x64-10 counter-based generator keyed
directly with the seed (``numpy.random.Philox(key=seed)``, counter from 0).
Each raw 64-bit output ``x`` becomes a uniform double ``(x >> 11) * 2**-53``.
Draw order:

1. per object: width, height, speed, heading, start x, start y;
2. identity embedding centres (rejection-sampled to the requested spacing);
3. per frame after the first, per object: turn test, then a new heading if it turns
   (``piecewise`` only);
4. per detection row in file order: ``dim`` noise components.

By default every object keeps to its own horizontal lane, and lanes are far
enough apart that boxes from different lanes never overlap, even with a
1.0 buffer. Objects bounce off the field edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Detection
from .errors import InputError
from .geometry import Box
from .linker import EmbeddingTable

MOTIONS = ("linear", "piecewise", "fast_dash")
_TO_UNIT = 2.0 ** -53


class PhiloxStream:
    """Uniform doubles from a Philox bit stream keyed by ``seed``."""

    def __init__(self, seed: int, chunk: int = 4096):
        self._bits = np.random.Philox(key=int(seed) & ((1 << 64) - 1))
        self._chunk = chunk
        self._buf = np.empty(0)
        self._pos = 0

    def _refill(self, need):
        raw = self._bits.random_raw(max(self._chunk, need))
        self._buf = np.concatenate([self._buf[self._pos:], (raw >> np.uint64(11)) * _TO_UNIT])
        self._pos = 0

    def uniforms(self, n: int) -> np.ndarray:
        if self._pos + n > len(self._buf):
            self._refill(n)
        out = self._buf[self._pos:self._pos + n]
        self._pos += n
        return out

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * float(self.uniforms(1)[0])


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    n_objects: int = 8
    n_frames: int = 600
    field_size: tuple[float, float] = (1920.0, 1080.0)
    motion: str = "piecewise"
    turn_prob: float = 0.02
    # (object index, first frame, last frame), 0-based and inclusive
    absences: tuple[tuple[int, int, int], ...] = ()
    emb_dim: int = 32
    center_separation: float = 0.8
    noise_scale: float = 0.2
    require_separable: bool = True
    box_width: tuple[float, float] = (12.0, 20.0)
    box_height: tuple[float, float] = (24.0, 34.0)
    speed: tuple[float, float] = (1.0, 4.0)  # pixels/frame for linear/piecewise
    dash_factor: tuple[float, float] = (1.2, 1.8)  # fast_dash speed in box widths/frame
    lanes: bool = True

    def validate(self):
        if self.motion not in MOTIONS:
            raise InputError(f"motion must be one of {MOTIONS}, got {self.motion!r}")
        if self.n_objects < 0 or self.n_frames < 1 or self.emb_dim < 1:
            raise InputError("n_objects >= 0, n_frames >= 1 and emb_dim >= 1 required")
        if self.require_separable and not self.noise_scale < self.center_separation / 2:
            raise InputError("noise_scale must be below half the centre separation")
        if self.dash_factor[0] <= 1.0 and self.motion == "fast_dash":
            raise InputError("fast_dash needs per-frame displacement above one box width")
        seen: dict[int, list[tuple[int, int]]] = {}
        for obj, first, last in self.absences:
            if not 0 <= obj < self.n_objects:
                raise InputError(f"absence names unknown object {obj}")
            if not 0 <= first <= last < self.n_frames:
                raise InputError(f"absence interval [{first}, {last}] outside the sequence")
            for a, b in seen.get(obj, []):
                if first <= b and a <= last:
                    raise InputError(f"object {obj} has overlapping absence intervals")
            seen.setdefault(obj, []).append((first, last))


@dataclass
class Scene:
    gt: dict[int, list[tuple[int, Box]]]
    detections: dict[int, list[Detection]]
    embeddings: EmbeddingTable
    centers: np.ndarray
    identities: list[int] = field(default_factory=list)  # ground-truth id per embedding row

    @property
    def detection_list(self) -> list[Detection]:
        return [d for f in sorted(self.detections) for d in self.detections[f]]


def _q(v: float) -> float:
    return round(v, 3)


def _centers(rng: PhiloxStream, n: int, dim: int, sep: float) -> np.ndarray:
    out: list[np.ndarray] = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 1000 * (n + 1):
            raise InputError(f"cannot place {n} centres {sep} apart in {dim} dimensions")
        v = 2.0 * rng.uniforms(dim) - 1.0
        norm = float(np.sqrt(np.dot(v, v)))
        if norm == 0.0:
            continue
        v = v / norm
        if all(float(np.linalg.norm(v - c)) >= sep for c in out):
            out.append(v)
    return np.array(out).reshape(n, dim)


def generate(spec: SceneSpec) -> Scene:
    """Build the scene described by ``spec``; identical specs give identical scenes."""
    spec.validate()
    rng = PhiloxStream(spec.seed)
    fw, fh = spec.field_size
    n = spec.n_objects
    band = fh / max(n, 1)
    hmax = spec.box_height[1]

    objs = []
    for k in range(n):
        w = _q(rng.uniform(*spec.box_width))
        h = _q(rng.uniform(*spec.box_height))
        if spec.motion == "fast_dash":
            speed = rng.uniform(*spec.dash_factor) * w
            heading = 0.0 if rng.uniform() < 0.5 else math.pi
        else:
            speed = rng.uniform(*spec.speed)
            heading = rng.uniform(0.0, 2.0 * math.pi)
        ux, uy = rng.uniform(), rng.uniform()
        if spec.lanes:
            jitter = max(0.0, (band - 3.2 * hmax) / 2.0)
            lane_top = (k + 0.5) * band - h / 2.0
            ylo, yhi = lane_top - jitter, lane_top + jitter
        else:
            ylo, yhi = 0.0, fh - h
        if spec.motion == "fast_dash":
            span = speed * (spec.n_frames - 1)
            if span > fw - w:
                raise InputError(
                    f"fast_dash object {k} travels {span:.0f}px in {spec.n_frames} frames; "
                    f"field is {fw:.0f}px wide")
            x = ux * (fw - w - span)
            if heading:
                x += span
            vx, vy = math.cos(heading) * speed, 0.0
        else:
            x = ux * (fw - w)
            vx, vy = math.cos(heading) * speed, math.sin(heading) * speed
        y = ylo + uy * (yhi - ylo)
        objs.append({"w": w, "h": h, "x": x, "y": y, "vx": vx, "vy": vy,
                     "speed": speed, "ylo": ylo, "yhi": yhi})

    centers = _centers(rng, n, spec.emb_dim, spec.center_separation)

    absent = set()
    for obj, first, last in spec.absences:
        absent.update((obj, f) for f in range(first, last + 1))

    gt: dict[int, list[tuple[int, Box]]] = {}
    dets: dict[int, list[Detection]] = {}
    identities: list[int] = []
    row = 0
    for t in range(spec.n_frames):
        if t > 0:
            for o in objs:
                if spec.motion == "piecewise" and rng.uniform() < spec.turn_prob:
                    heading = rng.uniform(0.0, 2.0 * math.pi)
                    o["vx"], o["vy"] = math.cos(heading) * o["speed"], math.sin(heading) * o["speed"]
                _move(o, fw)
        frame_gt, frame_dets = [], []
        for k, o in enumerate(objs):
            if (k, t) in absent:
                continue
            box = Box(_q(o["x"]), _q(o["y"]), o["w"], o["h"])
            frame_gt.append((k + 1, box))
            frame_dets.append(Detection(t, box, 1.0, row))
            identities.append(k + 1)
            row += 1
        if frame_gt:
            gt[t] = frame_gt
            dets[t] = frame_dets

    vectors = np.empty((row, spec.emb_dim))
    scale = spec.noise_scale / math.sqrt(spec.emb_dim)
    for r, ident in enumerate(identities):
        noise = (2.0 * rng.uniforms(spec.emb_dim) - 1.0) * scale
        vectors[r] = centers[ident - 1] + noise
    return Scene(gt, dets, EmbeddingTable(vectors), centers, identities)


def _move(o: dict, fw: float) -> None:
    x, y = o["x"] + o["vx"], o["y"] + o["vy"]
    xmax = fw - o["w"]
    if x < 0.0:
        x, o["vx"] = -x, -o["vx"]
    elif x > xmax:
        x, o["vx"] = 2.0 * xmax - x, -o["vx"]
    if y < o["ylo"]:
        y, o["vy"] = 2.0 * o["ylo"] - y, -o["vy"]
    elif y > o["yhi"]:
        y, o["vy"] = 2.0 * o["yhi"] - y, -o["vy"]
    # a jitter band narrower than one step can still overshoot after reflection
    o["x"] = min(max(x, 0.0), xmax)
    o["y"] = min(max(y, o["ylo"]), o["yhi"])


ABSENCE_KEY_SALT = 0x9E3779B97F4A7C15


def fragmenting_absences(seed: int, n_objects: int, n_frames: int, lo: int, hi: int,
                         margin: int = 10) -> tuple[tuple[int, int, int], ...]:
    """One absence per object, ``lo..hi`` frames long, strictly inside the sequence.

    Drawn from a Philox stream keyed with ``seed ^ ABSENCE_KEY_SALT`` (two
    uniforms per object: length, then start), so it never perturbs the
    scene's own stream.
    """
    if not 1 <= lo <= hi:
        raise InputError(f"absence length range must satisfy 1 <= lo <= hi, got {lo}:{hi}")
    if n_frames - hi - 2 * margin < 1:
        raise InputError(f"{n_frames} frames cannot hold a {hi}-frame absence with margins")
    rng = PhiloxStream(int(seed) ^ ABSENCE_KEY_SALT)
    out = []
    for k in range(n_objects):
        length = lo + min(int(rng.uniform() * (hi - lo + 1)), hi - lo)
        room = n_frames - length - 2 * margin
        first = margin + min(int(rng.uniform() * room), room - 1)
        out.append((k, first, first + length - 1))
    return tuple(out)


def linear_scene(starts, velocities, sizes, n_frames: int) -> Scene:
    """Hand-placed constant-velocity objects (no bouncing, no embeddings noise).

    ``starts``/``velocities``/``sizes`` are per-object ``(x, y)``, ``(vx, vy)``
    and ``(w, h)`` tuples; useful for crossing-path tests.
    """
    gt: dict[int, list[tuple[int, Box]]] = {}
    dets: dict[int, list[Detection]] = {}
    identities = []
    row = 0
    for t in range(n_frames):
        for k, ((x, y), (vx, vy), (w, h)) in enumerate(zip(starts, velocities, sizes)):
            box = Box(_q(x + t * vx), _q(y + t * vy), w, h)
            gt.setdefault(t, []).append((k + 1, box))
            dets.setdefault(t, []).append(Detection(t, box, 1.0, row))
            identities.append(k + 1)
            row += 1
    n = len(starts)
    centers = np.eye(max(n, 1))[:n]
    vectors = np.array([centers[i - 1] for i in identities]).reshape(row, max(n, 1))
    return Scene(gt, dets, EmbeddingTable(vectors), centers, identities)
