"""Command-line interface: ``cbiou {track,link,eval,bench,gridsearch,synth}``.

Path arguments accept either one file or a directory of per-sequence files
(``<name>.txt`` for MOT text, ``<name>.emb`` for embeddings). Tables go to
stdout as CSV; progress and timing go to stderr.

Config file keys (``--config``), one ``key = value`` per line::

    buffer_small     small (tier-1) buffer scale          [0.7]
    buffer_large     large (tier-2) buffer scale          [1.0]
    match_threshold  association threshold                [0.01; 0.5 for giou/diou]
    max_age          frames a track may stay unmatched    [60]
    affinity         biou_cascade | iou | giou | diou     [biou_cascade]
    coast            velocity | static                    [velocity]
    cut              offline linking cut threshold        [0.15]
    embeddings       embedding file or directory          [none]
    jobs             worker processes                     [1]

Flags given on the command line override the config file.
"""

from __future__ import annotations

import argparse
import logging
import statistics
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _backend, io, synth
from ._parallel import pmap
from .data import tracklets_to_frames
from .errors import InputError
from .linker import DEFAULT_CUT, link
from .metrics import MetricReport, evaluate_sequences
from .tracker import AFFINITIES, COAST_MODES, TrackerConfig, grid_search, run_sequence

log = logging.getLogger("cbiou")


# ---------------------------------------------------------------- helpers

def _sequences(path: Path, suffix: str = ".txt") -> list[tuple[str, Path]]:
    if path.is_dir():
        seqs = [(p.stem, p) for p in sorted(path.glob(f"*{suffix}"))]
        if not seqs:
            raise InputError(f"no *{suffix} files in {path}")
        return seqs
    if not path.exists():
        raise InputError(f"{path} does not exist")
    return [(path.stem, path)]


def _companion(base: Path, name: str, suffix: str, single: bool) -> Path:
    """The file for sequence ``name`` under ``base`` (a directory, or the file itself)."""
    if base.is_dir():
        return base / f"{name}{suffix}"
    if not single:
        raise InputError(f"{base} must be a directory when several sequences are given")
    return base


def _output(base: Path, name: str, suffix: str, multi: bool) -> Path:
    if multi:
        base.mkdir(parents=True, exist_ok=True)
        return base / f"{name}{suffix}"
    if base.is_dir():
        return base / f"{name}{suffix}"
    base.parent.mkdir(parents=True, exist_ok=True)
    return base


def _seq_names(args, found: list[tuple[str, Path]]) -> list[tuple[str, Path]]:
    if not getattr(args, "seq_list", None):
        return found
    wanted = [s.strip() for s in Path(args.seq_list).read_text().splitlines() if s.strip()]
    index = dict(found)
    missing = [w for w in wanted if w not in index]
    if missing:
        raise InputError(f"sequences not found: {', '.join(missing)}")
    return [(w, index[w]) for w in wanted]


def _run_config(args) -> io.RunConfig:
    cfg = io.read_config(args.config) if getattr(args, "config", None) else io.RunConfig()
    overrides = {}
    for flag, key in (("buffer_small", "buffer_small"), ("buffer_large", "buffer_large"),
                      ("threshold", "match_threshold"), ("max_age", "max_age"),
                      ("affinity", "affinity"), ("coast", "coast")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if overrides:
        cfg.tracker = replace(cfg.tracker, **overrides)
    if getattr(args, "cut", None) is not None:
        cfg.cut = args.cut
    if getattr(args, "jobs", None) is not None:
        cfg.jobs = args.jobs
    if getattr(args, "emb", None) is not None:
        cfg.embeddings = args.emb
    if cfg.jobs < 1:
        raise InputError("--jobs must be >= 1")
    return cfg


def _fmt_pct(v: float) -> str:
    return f"{100.0 * v:.3f}"


# ---------------------------------------------------------------- track

def _track_one(job):
    name, det_path, out_path, tcfg = job
    dets = io.read_detections(det_path)
    t0 = time.perf_counter()
    tracklets = run_sequence(tcfg, dets)
    elapsed = time.perf_counter() - t0
    io.write_mot(tracklets, out_path)
    frames = (max(dets) - min(dets) + 1) if dets else 0
    return name, len(tracklets), frames, elapsed


def cmd_track(args) -> int:
    cfg = _run_config(args)
    seqs = _sequences(Path(args.dets))
    multi = Path(args.dets).is_dir()
    jobs = [(name, p, _output(Path(args.out), name, ".txt", multi), cfg.tracker) for name, p in seqs]
    for name, n, frames, elapsed in pmap(_track_one, jobs, cfg.jobs):
        fps = frames / elapsed if elapsed > 0 else float("inf")
        print(f"{name}: {n} tracklets, {frames} frames, {fps:.1f} FPS", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- link

def _write_matrix(dist: np.ndarray, path: Path) -> None:
    lines = [",".join("inf" if np.isinf(v) else f"{v:.6f}" for v in row) for row in dist]
    path.write_text("".join(line + "\n" for line in lines))


def _link_one(job):
    name, trk_path, det_path, emb_path, out_path, cut, dump = job
    dets = io.read_detections(det_path)
    table = io.read_embeddings(emb_path)
    io.check_alignment(dets, table)
    tracklets = io.attach_rows(io.read_tracklets(trk_path), dets)
    merged, before, after = link(tracklets, table, cut)
    io.write_mot(merged, out_path)
    if dump is not None:
        dump.mkdir(parents=True, exist_ok=True)
        _write_matrix(before, dump / f"{name}_pre.csv")
        _write_matrix(after, dump / f"{name}_post.csv")
    return name, len(tracklets), len(merged)


def cmd_link(args) -> int:
    cfg = _run_config(args)
    if cfg.embeddings is None:
        raise InputError("--emb (or 'embeddings' in the config) is required")
    seqs = _sequences(Path(args.tracks))
    multi = Path(args.tracks).is_dir()
    single = len(seqs) == 1 and not multi
    dump = Path(args.dump_distance) if args.dump_distance else None
    jobs = [(name, p,
             _companion(Path(args.dets), name, ".txt", single),
             _companion(Path(cfg.embeddings), name, ".emb", single),
             _output(Path(args.out), name, ".txt", multi), cfg.cut, dump)
            for name, p in seqs]
    for name, n_in, n_out in pmap(_link_one, jobs, cfg.jobs):
        print(f"{name}: {n_in} -> {n_out} tracklets", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- eval

def _eval_one(job):
    name, gt_path, pred_path, gate = job
    return name, evaluate_sequences([(io.read_annotations(gt_path), io.read_annotations(pred_path))],
                                    gate)


def _load_pair(job):
    _, gt_path, pred_path, _ = job
    return io.read_annotations(gt_path), io.read_annotations(pred_path)


def _report_row(name: str, r: MetricReport) -> str:
    return ",".join([name] + [_fmt_pct(v) for v in r.values()])


def cmd_eval(args) -> int:
    seqs = _seq_names(args, _sequences(Path(args.gt)))
    single = len(seqs) == 1 and not Path(args.gt).is_dir()
    jobs = [(name, p, _companion(Path(args.pred), name, ".txt", single), args.iou_gate)
            for name, p in seqs]
    for _, _, pred, _ in jobs:
        if not pred.exists():
            raise InputError(f"missing prediction file {pred}")
    results = pmap(_eval_one, jobs, args.jobs)
    combined = evaluate_sequences(pmap(_load_pair, jobs, args.jobs), args.iou_gate)
    print("sequence," + ",".join(MetricReport.COLUMNS))
    for name, report in results:
        print(_report_row(name, report))
    print(_report_row("COMBINED", combined))
    return 0


# ---------------------------------------------------------------- bench

def cmd_bench(args) -> int:
    cfg = _run_config(args)
    if args.backend:
        _backend.use(args.backend)
    if args.repeat < 1:
        raise InputError("--repeat must be >= 1")
    dets = io.read_detections(args.dets)
    frames = (max(dets) - min(dets) + 1) if dets else 0
    fps = []
    tracklets = []
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        tracklets = run_sequence(cfg.tracker, dets)
        elapsed = time.perf_counter() - t0
        fps.append(frames / elapsed if elapsed > 0 else float("inf"))
    if args.out:
        io.write_mot(tracklets, args.out)
    print("backend,frames,detections,repeat,min_fps,median_fps,max_fps")
    n_det = sum(len(v) for v in dets.values())
    print(f"{_backend.name},{frames},{n_det},{args.repeat},"
          f"{min(fps):.1f},{statistics.median(fps):.1f},{max(fps):.1f}")
    return 0


# ---------------------------------------------------------------- gridsearch

def parse_grid(text: str) -> list[float]:
    """``"lo:hi:step"`` (inclusive) or a comma list ``"0.5,0.7,1.0"``."""
    try:
        if ":" in text:
            lo, hi, step = (float(x) for x in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(np.floor((hi - lo) / step + 1e-9)) + 1
            return [round(lo + k * step, 10) for k in range(count)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad grid {text!r}; use lo:hi:step or a comma list") from None


def cmd_gridsearch(args) -> int:
    cfg = _run_config(args)
    seqs = _seq_names(args, _sequences(Path(args.gt)))
    single = len(seqs) == 1 and not Path(args.gt).is_dir()
    sequences = [(io.read_annotations(p),
                  io.read_detections(_companion(Path(args.dets), name, ".txt", single)))
                 for name, p in seqs]
    values = parse_grid(args.grid)
    large_values = parse_grid(args.grid_large) if args.grid_large else values
    cells = [(s, l) for s in values for l in large_values if s <= l]
    if not cells:
        raise InputError("grid has no cell with small <= large")
    threshold = cfg.tracker.match_threshold
    if threshold is None:
        threshold = 0.01
    best, table = grid_search(sequences, cells, threshold, cfg.tracker, cfg.jobs)
    print("buffer_small,buffer_large,HOTA,DetA,AssA,best")
    for c in table:
        flag = int((c.buffer_small, c.buffer_large) == best)
        print(f"{c.buffer_small:g},{c.buffer_large:g},{_fmt_pct(c.hota)},{_fmt_pct(c.deta)},"
              f"{_fmt_pct(c.assa)},{flag}")
    print(f"best cell: small={best[0]:g} large={best[1]:g}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- synth

def _parse_absence(text: str) -> tuple[int, int, int]:
    try:
        obj, first, last = (int(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"bad --absence {text!r}; use object:first:last (1-based frames)") from None
    return obj, first - 1, last - 1


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"bad range {text!r}; use lo:hi") from None
    return lo, hi


def cmd_synth(args) -> int:
    out = Path(args.out)
    fw, fh = (float(x) for x in args.field.lower().split("x"))
    for sub in ("gt", "det", "emb"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    for k in range(args.n_seqs):
        seed = args.seed + k
        absences = tuple(_parse_absence(a) for a in args.absence)
        if args.random_absences:
            lo, hi = _parse_range(args.random_absences)
            absences += synth.fragmenting_absences(seed, args.objects, args.frames, lo, hi)
        spec = synth.SceneSpec(
            seed=seed, n_objects=args.objects, n_frames=args.frames, field_size=(fw, fh),
            motion=args.motion, turn_prob=args.turn_prob, absences=absences,
            emb_dim=args.emb_dim, noise_scale=args.noise, center_separation=args.separation,
        )
        scene = synth.generate(spec)
        name = f"seq{k:03d}"
        io.write_annotations(scene.gt, out / "gt" / f"{name}.txt")
        io.write_detections(scene.detection_list, out / "det" / f"{name}.txt")
        io.write_embeddings(scene.embeddings, out / "emb" / f"{name}.emb")
        print(f"{name}: seed {seed}, {len(scene.identities)} detections", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- parser

def _tracker_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value run configuration file")
    p.add_argument("--buffer-small", type=float, help="tier-1 buffer scale (default 0.7)")
    p.add_argument("--buffer-large", type=float, help="tier-2 buffer scale (default 1.0)")
    p.add_argument("--threshold", type=float,
                   help="association threshold (default 0.01; 0.5 for giou/diou)")
    p.add_argument("--max-age", type=int,
                   help="frames a track may stay unmatched (default 60; use 1 before 'link')")
    p.add_argument("--affinity", choices=AFFINITIES, help="association score (default biou_cascade)")
    p.add_argument("--coast", choices=COAST_MODES, help="lost-track prediction (default velocity)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbiou", description=__doc__.split("\n\n")[0],
        epilog=__doc__.split("\n\n", 1)[1], formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="online C-BIoU tracking")
    p.add_argument("--dets", required=True, help="detection file or directory")
    p.add_argument("--out", required=True, help="output file or directory")
    _tracker_flags(p)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("link", help="offline appearance linking of tracklets")
    p.add_argument("--tracks", required=True, help="tracker output file or directory")
    p.add_argument("--dets", required=True, help="detection file or directory (embedding rows)")
    p.add_argument("--emb", help="embedding file or directory")
    p.add_argument("--cut", type=float, help=f"clustering cut threshold (default {DEFAULT_CUT})")
    p.add_argument("--out", required=True)
    p.add_argument("--dump-distance", metavar="DIR",
                   help="write <seq>_pre.csv / <seq>_post.csv distance matrices here")
    p.add_argument("--config")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("eval", help="HOTA/DetA/AssA/MOTA/IDF1")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--seq-list", help="file with one sequence name per line")
    p.add_argument("--iou-gate", type=float, default=0.5, help="MOTA/IDF1 IoU gate")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="online tracking throughput")
    p.add_argument("--dets", required=True)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--backend", choices=sorted(_backend.BACKENDS))
    p.add_argument("--out", help="also write the tracked output here")
    _tracker_flags(p)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gridsearch", help="HOTA over (small, large) buffer scales")
    p.add_argument("--gt", required=True)
    p.add_argument("--dets", required=True)
    p.add_argument("--seq-list")
    p.add_argument("--grid", default="0.3:1.0:0.1", help="lo:hi:step or comma list")
    p.add_argument("--grid-large", help="separate grid for the large scale (default: --grid)")
    _tracker_flags(p)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("synth", help="write synthetic gt/det/emb sequences")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-seqs", type=int, default=1)
    p.add_argument("--objects", type=int, default=8)
    p.add_argument("--frames", type=int, default=600)
    p.add_argument("--motion", choices=synth.MOTIONS, default="piecewise")
    p.add_argument("--turn-prob", type=float, default=0.02)
    p.add_argument("--absence", action="append", default=[], metavar="OBJ:FIRST:LAST",
                   help="object (0-based) absent over 1-based frames FIRST..LAST; repeatable")
    p.add_argument("--random-absences", metavar="LO:HI",
                   help="make every object vanish once for LO..HI frames")
    p.add_argument("--emb-dim", type=int, default=32)
    p.add_argument("--noise", type=float, default=0.2)
    p.add_argument("--separation", type=float, default=0.8)
    p.add_argument("--field", default="1920x1080")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"cbiou {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
