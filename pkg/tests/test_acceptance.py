"""Acceptance gate: one test per criterion, each printing a PASS/FAIL summary line.

Run alone with ``pytest tests/test_acceptance.py``; the summary appears at the end
of the pytest output under "acceptance criteria".
"""

import csv
import io as _io
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from cbiou import io, synth
from cbiou.assignment import match_optimal
from cbiou.cli import main
from cbiou.data import Tracklet, tracklets_to_frames
from cbiou.geometry import KIND_DIOU, KIND_GIOU, KIND_IOU, Box, biou, diou, giou, iou, score_matrix
from cbiou.linker import DEFAULT_CUT, EmbeddingTable, link, tracklet_distance
from cbiou.metrics import evaluate
from cbiou.tracker import TrackerConfig, run_sequence

from oracles import best_partial_assignment, double_sum_distance, shapely_scores

pytestmark = pytest.mark.acceptance


def _check(record, number, title, passed, detail):
    record(number, title, bool(passed), detail)
    assert passed, f"criterion {number} failed: {detail}"


def _random_boxes(rng, n):
    # a small arena keeps a good share of pairs overlapping, nested or touching
    l = rng.uniform(-50, 50, n)
    t = rng.uniform(-50, 50, n)
    w = rng.uniform(0.5, 60, n)
    h = rng.uniform(0.5, 60, n)
    return np.stack([l, t, w, h], axis=1)


def test_1_geometry_oracle(record_criterion):
    rng = np.random.default_rng(101)
    n = 10_000
    start = time.perf_counter()
    a, b = _random_boxes(rng, n), _random_boxes(rng, n)
    scales = rng.uniform(0.0, 1.5, n)
    worst = 0.0
    oracle = shapely_scores(a, b)
    for kind_idx, fn in enumerate((iou, giou, diou)):
        want = oracle[kind_idx]
        got = np.array([fn(Box(*x), Box(*y)) for x, y in zip(a, b)])
        worst = max(worst, float(np.max(np.abs(got - want))))
        kind = (KIND_IOU, KIND_GIOU, KIND_DIOU)[kind_idx]
        diag = np.array([score_matrix(a[k:k + 1], b[k:k + 1], kind)[0, 0] for k in range(0, n, 50)])
        worst = max(worst, float(np.max(np.abs(diag - want[::50]))))
    buffered = shapely_scores(a, b, scales)[0]
    got = np.array([biou(Box(*x), Box(*y), s) for x, y, s in zip(a, b, scales)])
    worst = max(worst, float(np.max(np.abs(got - buffered))))
    exact = all(biou(Box(*x), Box(*y), 0.0) == iou(Box(*x), Box(*y)) for x, y in zip(a, b))
    exact &= bool(np.array_equal(score_matrix(a[:500], b[:500], KIND_IOU, 0.0),
                                 score_matrix(a[:500], b[:500], KIND_IOU)))
    elapsed = time.perf_counter() - start
    _check(record_criterion, 1, "geometry vs polygon oracle",
           worst < 1e-9 and exact and elapsed < 5.0,
           f"(max |diff| {worst:.2e}, biou(s=0)==iou exact: {exact}, {elapsed:.2f}s)")


def test_2_assignment_optimality(record_criterion):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    bad = 0
    for _ in range(1000):
        n, m = rng.integers(1, 8, size=2)
        scores = rng.uniform(0, 1, (n, m))
        if rng.uniform() < 0.3:
            scores = np.round(scores, 1)  # exercise ties
        threshold = float(rng.uniform(0, 1))
        res = match_optimal(scores, threshold)
        used_t = [i for i, _ in res.pairs]
        used_d = [j for _, j in res.pairs]
        valid = (len(set(used_t)) == len(used_t) and len(set(used_d)) == len(used_d)
                 and all(scores[i, j] >= threshold for i, j in res.pairs))
        total = sum(scores[i, j] for i, j in res.pairs)
        if not valid or abs(total - best_partial_assignment(scores, threshold)) > 1e-9:
            bad += 1
    elapsed = time.perf_counter() - start
    _check(record_criterion, 2, "assignment equals exhaustive optimum",
           bad == 0 and elapsed < 30.0, f"(1000 matrices, {bad} mismatches, {elapsed:.2f}s)")


def test_3_non_overlap_recovery(record_criterion):
    worst_iou_assa, worst_cbiou_hota = 0.0, 1.0
    for seed in range(20):
        scene = synth.generate(synth.SceneSpec(seed=seed, n_objects=6, n_frames=40, motion="fast_dash"))
        plain = evaluate(scene.gt, tracklets_to_frames(
            run_sequence(TrackerConfig(affinity="iou"), scene.detections)))
        ours = evaluate(scene.gt, tracklets_to_frames(
            run_sequence(TrackerConfig(0.7, 1.0, match_threshold=0.01), scene.detections)))
        worst_iou_assa = max(worst_iou_assa, plain.assa)
        worst_cbiou_hota = min(worst_cbiou_hota, ours.hota)
    _check(record_criterion, 3, "non-overlap recovery on fast-dash scenes",
           worst_iou_assa < 0.6 and abs(worst_cbiou_hota - 1.0) <= 1e-3,
           f"(IoU tracker max AssA {worst_iou_assa:.4f}, C-BIoU min HOTA {worst_cbiou_hota:.4f})")


def _owner(tracklet, gt_lookup):
    ids = Counter(gt_lookup[(f, b)] for f, b, _ in tracklet.entries)
    return ids.most_common(1)[0][0]


def test_4_fragment_and_recover(record_criterion):
    min_fragments, min_idf1, min_hota = 10**9, 1.0, 1.0
    for seed in range(10):
        absences = synth.fragmenting_absences(seed, 8, 600, 61, 90)
        scene = synth.generate(synth.SceneSpec(seed=seed, n_objects=8, n_frames=600, absences=absences))
        tracklets = run_sequence(TrackerConfig(max_age=1), scene.detections)
        lookup = {(f, b): i for f, items in scene.gt.items() for i, b in items}
        per_object = Counter(_owner(t, lookup) for t in tracklets)
        min_fragments = min(min_fragments, min(per_object[k] for k in range(1, 9)))
        merged, _, _ = link(tracklets, scene.embeddings, DEFAULT_CUT)
        r = evaluate(scene.gt, tracklets_to_frames(merged))
        min_idf1, min_hota = min(min_idf1, r.idf1), min(min_hota, r.hota)
    _check(record_criterion, 4, "fragment-and-recover end to end",
           min_fragments >= 2 and min_idf1 == 1.0 and abs(min_hota - 1.0) <= 1e-3,
           f"(min tracklets/object {min_fragments}, min IDF1 {min_idf1:.4f}, min HOTA {min_hota:.4f})")


def test_5_distance_equivalence(record_criterion):
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(1000):
        dim = int(rng.integers(1, 65))
        n1, n2 = (int(x) for x in rng.integers(1, 16, size=2))
        feats = rng.normal(size=(n1 + n2, dim)) * rng.uniform(0.01, 100.0, size=(n1 + n2, 1))
        if rng.uniform() < 0.2:
            feats[n1:] = feats[0] + rng.normal(scale=1e-3, size=(n2, dim))  # near-duplicate identity
        table = EmbeddingTable(feats)
        box = Box(0, 0, 1, 1)
        t1 = Tracklet(1, [(f, box, f) for f in range(n1)])
        t2 = Tracklet(2, [(n1 + k, box, n1 + k) for k in range(n2)])
        want = double_sum_distance(feats[:n1].tolist(), feats[n1:].tolist())
        worst = max(worst, abs(tracklet_distance(t1, t2, table) - want))
    _check(record_criterion, 5, "mean-vector distance equals double sum",
           worst < 1e-9, f"(1000 pairs, max |diff| {worst:.2e})")


def test_6_metric_self_consistency(record_criterion):
    rng = np.random.default_rng(606)
    perfect = 0
    for k in range(100):
        n_obj = int(rng.integers(1, 10))
        n_frames = int(rng.integers(5, 80))
        absences = tuple((o, int(a), int(a) + int(rng.integers(0, 5)))
                         for o in range(n_obj) if rng.uniform() < 0.3
                         for a in [rng.integers(0, max(1, n_frames - 5))])
        motion = ("linear", "piecewise")[k % 2]
        gt = synth.generate(synth.SceneSpec(seed=k, n_objects=n_obj, n_frames=n_frames,
                                            motion=motion, absences=absences)).gt
        perfect += evaluate(gt, gt).values() == (1.0, 1.0, 1.0, 1.0, 1.0)
    box = Box(0, 0, 10, 10)
    gt = {f: [(1, box)] for f in range(10)}
    pred = {f: [(1 if f < 5 else 2, box)] for f in range(10)}
    r = evaluate(gt, pred)
    switch_ok = (abs(r.idf1 - 0.5) <= 1e-4 and abs(r.mota - 0.9) <= 1e-4
                 and abs(r.hota - 0.7071) <= 1e-4)
    _check(record_criterion, 6, "metric self-consistency",
           perfect == 100 and switch_ok,
           f"(gt==gt exact on {perfect}/100; switch case IDF1 {r.idf1:.4f} MOTA {r.mota:.4f} "
           f"HOTA {r.hota:.4f})")


def _csv(text):
    return list(csv.reader(_io.StringIO(text)))


def test_7_throughput(record_criterion, tmp_path, capsys):
    main(["synth", "--out", str(tmp_path), "--objects", "22", "--frames", "750", "--seed", "7"])
    capsys.readouterr()
    code = main(["bench", "--dets", str(tmp_path / "det/seq000.txt"), "--repeat", "5"])
    head, row = _csv(capsys.readouterr().out)
    rec = dict(zip(head, row))
    median = float(rec["median_fps"])
    _check(record_criterion, 7, "throughput on 750 frames x 22 objects",
           code == 0 and median >= 300.0,
           f"(backend {rec['backend']}, median {median:.0f} FPS, min {float(rec['min_fps']):.0f})")


def _tree(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _pipeline(base: Path, jobs: str, capsys) -> dict:
    """Every command once; returns output files and data streams keyed by name."""
    j = ["--jobs", jobs]
    data = base / "data"
    outputs = {}

    def call(name, argv):
        code = main([str(a) for a in argv])
        outputs[name + ".stdout"] = capsys.readouterr().out.encode()
        outputs[name + ".code"] = str(code).encode()

    call("synth", ["synth", "--out", data, "--seed", 11, "--n-seqs", 3, "--objects", 5,
                   "--frames", 160, "--random-absences", "20:40", *j])
    call("track", ["track", "--dets", data / "det", "--out", base / "trk", "--max-age", 1, *j])
    call("link", ["link", "--tracks", base / "trk", "--dets", data / "det", "--emb", data / "emb",
                  "--out", base / "linked", "--dump-distance", base / "dump", *j])
    call("eval", ["eval", "--gt", data / "gt", "--pred", base / "linked", *j])
    call("gridsearch", ["gridsearch", "--gt", data / "gt", "--dets", data / "det",
                        "--grid", "0.3:0.9:0.3", *j])
    call("bench", ["bench", "--dets", data / "det/seq000.txt", "--repeat", 1,
                   "--out", base / "bench.txt", *j])
    del outputs["bench.stdout"]  # timings; the tracked output is compared instead
    for sub in ("data", "trk", "linked", "dump"):
        outputs.update({f"{sub}/{k}": v for k, v in _tree(base / sub).items()})
    outputs["bench.txt"] = (base / "bench.txt").read_bytes()
    return outputs


def test_8_determinism(record_criterion, tmp_path, capsys):
    runs = {}
    for jobs in ("1", "4"):
        for rep in range(2):
            runs[(jobs, rep)] = _pipeline(tmp_path / f"j{jobs}r{rep}", jobs, capsys)
    ref = runs[("1", 0)]
    differing = sorted({k for r in runs.values() for k in set(r) | set(ref) if r.get(k) != ref.get(k)})
    codes_ok = all(v == b"0" for k, v in ref.items() if k.endswith(".code"))
    _check(record_criterion, 8, "byte-identical output across --jobs 1/4 and reruns",
           not differing and codes_ok,
           f"({len(ref)} artefacts x 4 runs, differing: {differing or 'none'})")
