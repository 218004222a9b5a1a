"""HOTA (with DetA/AssA), MOTA and IDF1.

Semantics follow the TrackEval reference evaluator: IoU similarity, HOTA
averaged over alpha = 0.05, 0.10, ..., 0.95 with alignment-weighted
per-frame matching, CLEAR matching that prefers the previous frame's
pairing, and IDF1 from a global optimal identity assignment.

Sequences are combined by pooling counts (and TP-weighting AssA), never by
averaging per-sequence scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .data import FrameAnnotations
from .errors import InputError
from .geometry import KIND_IOU, boxes_to_array, score_matrix

ALPHAS = np.arange(0.05, 0.99, 0.05)
EPS = np.finfo(float).eps


@dataclass
class MetricReport:
    hota: float
    deta: float
    assa: float
    mota: float
    idf1: float
    counts: dict = field(default_factory=dict, repr=False, compare=False)

    COLUMNS = ("HOTA", "DetA", "AssA", "MOTA", "IDF1")

    def values(self) -> tuple[float, ...]:
        return (self.hota, self.deta, self.assa, self.mota, self.idf1)

    def as_percent(self) -> tuple[float, ...]:
        return tuple(100.0 * v for v in self.values())


@dataclass
class _Raw:
    """Per-sequence sufficient statistics; summed across sequences."""

    hota_tp: np.ndarray
    hota_fn: np.ndarray
    hota_fp: np.ndarray
    assa_weighted: np.ndarray  # AssA(alpha) * TP(alpha)
    clr_tp: int = 0
    clr_fn: int = 0
    clr_fp: int = 0
    idsw: int = 0
    idtp: int = 0
    idfn: int = 0
    idfp: int = 0

    def __add__(self, other: _Raw) -> _Raw:
        return _Raw(
            self.hota_tp + other.hota_tp, self.hota_fn + other.hota_fn,
            self.hota_fp + other.hota_fp, self.assa_weighted + other.assa_weighted,
            self.clr_tp + other.clr_tp, self.clr_fn + other.clr_fn,
            self.clr_fp + other.clr_fp, self.idsw + other.idsw,
            self.idtp + other.idtp, self.idfn + other.idfn, self.idfp + other.idfp,
        )


def _index(frames: FrameAnnotations, label: str):
    ids = sorted({i for f in frames.values() for i, _ in f})
    lookup = {i: k for k, i in enumerate(ids)}
    out = {}
    for frame, items in frames.items():
        seen = set()
        for i, _ in items:
            if i in seen:
                raise InputError(f"{label}: identity {i} appears twice in frame {frame}")
            seen.add(i)
        out[frame] = (np.array([lookup[i] for i, _ in items], dtype=np.int64),
                      boxes_to_array(b for _, b in items))
    return out, len(ids)


def _accumulate(gt: FrameAnnotations, pred: FrameAnnotations, iou_gate: float) -> _Raw:
    if not 0.0 < iou_gate < 1.0:
        raise InputError(f"iou_gate must lie in (0, 1), got {iou_gate}")
    g, n_gt = _index(gt, "ground truth")
    p, n_tr = _index(pred, "prediction")
    empty = (np.zeros(0, dtype=np.int64), np.zeros((0, 4)))
    steps = []
    for frame in sorted(set(g) | set(p)):
        gids, gboxes = g.get(frame, empty)
        tids, tboxes = p.get(frame, empty)
        steps.append((gids, tids, score_matrix(gboxes, tboxes, KIND_IOU)))

    na = len(ALPHAS)
    raw = _Raw(np.zeros(na), np.zeros(na), np.zeros(na), np.zeros(na))
    gt_count = np.zeros(n_gt)
    tr_count = np.zeros(n_tr)
    potential = np.zeros((n_gt, n_tr))
    id_potential = np.zeros((n_gt, n_tr))
    for gids, tids, sim in steps:
        gt_count[gids] += 1
        tr_count[tids] += 1
        if len(gids) and len(tids):
            denom = sim.sum(0)[None, :] + sim.sum(1)[:, None] - sim
            sim_iou = np.zeros_like(sim)
            ok = denom > EPS
            sim_iou[ok] = sim[ok] / denom[ok]
            potential[gids[:, None], tids[None, :]] += sim_iou
            id_potential[gids[:, None], tids[None, :]] += sim >= iou_gate - EPS

    # HOTA
    alignment = potential / np.maximum(EPS, gt_count[:, None] + tr_count[None, :] - potential)
    matches = np.zeros((na, n_gt, n_tr))
    for gids, tids, sim in steps:
        if not len(gids) or not len(tids):
            raw.hota_fn += len(gids)
            raw.hota_fp += len(tids)
            continue
        rows, cols = linear_sum_assignment(-(alignment[gids[:, None], tids[None, :]] * sim))
        matched_sim = sim[rows, cols]
        for a, alpha in enumerate(ALPHAS):
            keep = matched_sim >= alpha - EPS
            k = int(keep.sum())
            raw.hota_tp[a] += k
            raw.hota_fn[a] += len(gids) - k
            raw.hota_fp[a] += len(tids) - k
            matches[a, gids[rows[keep]], tids[cols[keep]]] += 1
    for a in range(na):
        mc = matches[a]
        ass = mc / np.maximum(1, gt_count[:, None] + tr_count[None, :] - mc)
        assa = np.sum(mc * ass) / max(1.0, raw.hota_tp[a])
        raw.assa_weighted[a] = assa * raw.hota_tp[a]

    # CLEAR
    prev_id = np.full(n_gt, np.nan)
    prev_step_id = np.full(n_gt, np.nan)
    for gids, tids, sim in steps:
        if not len(gids):
            raw.clr_fp += len(tids)
            continue
        if not len(tids):
            raw.clr_fn += len(gids)
            continue
        score = 1000.0 * (tids[None, :] == prev_step_id[gids][:, None]) + sim
        score[sim < iou_gate - EPS] = 0.0
        rows, cols = linear_sum_assignment(-score)
        ok = score[rows, cols] > EPS
        mg, mt = gids[rows[ok]], tids[cols[ok]]
        before = prev_id[mg]
        raw.idsw += int(np.sum(~np.isnan(before) & (mt != before)))
        prev_id[mg] = mt
        prev_step_id[:] = np.nan
        prev_step_id[mg] = mt
        raw.clr_tp += len(mg)
        raw.clr_fn += len(gids) - len(mg)
        raw.clr_fp += len(tids) - len(mg)

    # Identity
    if n_gt and n_tr:
        rows, cols = linear_sum_assignment(-id_potential)
        raw.idtp = int(id_potential[rows, cols].sum())
    raw.idfn = int(gt_count.sum()) - raw.idtp
    raw.idfp = int(tr_count.sum()) - raw.idtp
    return raw


def _finalize(raw: _Raw) -> MetricReport:
    tp, fn, fp = raw.hota_tp, raw.hota_fn, raw.hota_fp
    deta = tp / np.maximum(1.0, tp + fn + fp)
    assa = raw.assa_weighted / np.maximum(1.0, tp)
    hota = np.sqrt(deta * assa)
    n_gt = raw.clr_tp + raw.clr_fn
    mota = (raw.clr_tp - raw.clr_fp - raw.idsw) / max(1.0, n_gt)
    idf1 = raw.idtp / max(1.0, raw.idtp + 0.5 * raw.idfp + 0.5 * raw.idfn)
    counts = {
        "GT": n_gt, "TP": raw.clr_tp, "FN": raw.clr_fn, "FP": raw.clr_fp, "IDSW": raw.idsw,
        "IDTP": raw.idtp, "IDFN": raw.idfn, "IDFP": raw.idfp,
    }
    return MetricReport(float(hota.mean()), float(deta.mean()), float(assa.mean()),
                        float(mota), float(idf1), counts)


def evaluate(gt: FrameAnnotations, pred: FrameAnnotations, iou_gate: float = 0.5) -> MetricReport:
    """Score one sequence. ``iou_gate`` is the CLEAR/identity match threshold."""
    return _finalize(_accumulate(gt, pred, iou_gate))


def evaluate_sequences(pairs: Sequence[tuple[FrameAnnotations, FrameAnnotations]],
                       iou_gate: float = 0.5) -> MetricReport:
    """Pool ``(gt, pred)`` sequences into one report."""
    if not pairs:
        raise InputError("no sequences to evaluate")
    total = None
    for gt, pred in pairs:
        raw = _accumulate(gt, pred, iou_gate)
        total = raw if total is None else total + raw
    return _finalize(total)
