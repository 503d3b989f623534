"""Greedy confidence-ranked matching, PR curves and mAP over 3D IoU thresholds."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from semmap.geometry import iou_matrix
from semmap.quality.objectmap import ObjectMap, check_vocabulary
from semmap.vocabulary import BACKGROUND_ID

THRESHOLDS = np.round(np.arange(0.25, 0.951, 0.05), 2)
RECALL_GRID = np.linspace(0.0, 1.0, 101)
INTERPOLATIONS = ("101", "all")

BREAKDOWN_LABELS = ("IoU75", "IoU50", "IoU25", "Loc", "BG", "FN")
LOC_THRESHOLD = 0.10


@dataclass
class MatchResult:
    pairs: list[tuple[int, int, float]]
    unmatched_est: list[int]
    unmatched_gt: list[int]
    iou_threshold: float

    @property
    def n_tp(self):
        return len(self.pairs)

    @property
    def n_fp(self):
        return len(self.unmatched_est)

    @property
    def n_fn(self):
        return len(self.unmatched_gt)


@dataclass(eq=False)
class PRCurve:
    """Precision-recall points after the monotone envelope, plus AP."""

    recall: np.ndarray
    precision: np.ndarray
    ap: float
    label: str = ""

    @property
    def points(self):
        return list(zip(self.recall.tolist(), self.precision.tolist()))

    def sampled(self, grid=RECALL_GRID) -> np.ndarray:
        """Envelope precision at each recall in ``grid`` (0 past max recall)."""
        if self.recall.size == 0:
            return np.zeros(len(grid))
        idx = np.searchsorted(self.recall, grid, side="left")
        ok = idx < self.recall.size
        out = np.zeros(len(grid))
        out[ok] = self.precision[idx[ok]]
        return out


@dataclass(eq=False)
class MapScores:
    map3d: float
    map25: float
    map50: float
    per_class_ap: dict[int, np.ndarray] = field(default_factory=dict)
    thresholds: np.ndarray = field(default_factory=lambda: THRESHOLDS.copy())


# --- ranking and greedy matching ----------------------------------------------

@dataclass
class _ClassSweep:
    det: np.ndarray        # global est indices in rank order
    gt: np.ndarray         # global gt indices of this class
    iou: np.ndarray        # rank-ordered det x gt IoU
    best: np.ndarray       # best same-class IoU per ranked det
    conf: np.ndarray


def _sweep(iou, est_cls, conf, gt_cls, class_id) -> _ClassSweep:
    det = np.flatnonzero(est_cls == class_id)
    gt = np.flatnonzero(gt_cls == class_id)
    sub = iou[np.ix_(det, gt)]
    best = sub.max(axis=1) if gt.size else np.zeros(det.size)
    # confidence desc, best IoU desc, index asc
    order = np.lexsort((det, -best, -conf[det]))
    return _ClassSweep(det[order], gt, sub[order], best[order], conf[det][order])


def _greedy(sub: np.ndarray, threshold: float) -> np.ndarray:
    """Local gt column claimed by each ranked row, or -1."""
    n_det, n_gt = sub.shape
    claimed = np.zeros(n_gt, dtype=bool)
    match = np.full(n_det, -1, dtype=np.int64)
    if n_gt == 0:
        return match
    for k in range(n_det):
        cand = np.where(claimed, -1.0, sub[k])
        j = int(np.argmax(cand))
        if cand[j] > 0.0 and cand[j] >= threshold:
            claimed[j] = True
            match[k] = j
    return match


def _labels(est: ObjectMap, gt: ObjectMap):
    check_vocabulary(est, gt)
    iou = iou_matrix(est.objects, gt.objects)
    return iou, est.class_ids, est.confidences, gt.class_ids


def _eval_classes(est_cls, gt_cls):
    present = set(est_cls.tolist()) | set(gt_cls.tolist())
    present.discard(BACKGROUND_ID)
    return sorted(present)


def match_detections(est: ObjectMap, gt: ObjectMap, iou_threshold: float) -> MatchResult:
    """Per-class greedy matching of detections in descending confidence.

    Each detection claims the unclaimed same-class ground-truth object with
    the highest IoU, provided that IoU reaches ``iou_threshold``; otherwise
    it is a false positive. Ties in confidence are broken by best IoU, then
    by index.
    """
    iou, est_cls, conf, gt_cls = _labels(est, gt)
    pairs = []
    matched_est, matched_gt = set(), set()
    for c in _eval_classes(est_cls, gt_cls):
        sw = _sweep(iou, est_cls, conf, gt_cls, c)
        for k, j in enumerate(_greedy(sw.iou, iou_threshold)):
            if j >= 0:
                e, g = int(sw.det[k]), int(sw.gt[j])
                pairs.append((e, g, float(iou[e, g])))
                matched_est.add(e)
                matched_gt.add(g)
    pairs.sort()
    return MatchResult(
        pairs=pairs,
        unmatched_est=[i for i in range(len(est)) if i not in matched_est],
        unmatched_gt=[j for j in range(len(gt)) if j not in matched_gt],
        iou_threshold=float(iou_threshold),
    )


# --- PR curves -----------------------------------------------------------------

def curve_from_flags(tp, n_gt: int, interpolation: str = "101", label: str = "") -> PRCurve:
    """Build a PR curve from rank-ordered TP flags and the number of positives."""
    if interpolation not in INTERPOLATIONS:
        raise ValueError(f"interpolation must be one of {INTERPOLATIONS}")
    tp = np.asarray(tp, dtype=bool)
    if tp.size == 0 or n_gt == 0:
        recall = np.zeros(tp.size)
        return PRCurve(recall, np.zeros(tp.size), 0.0, label)
    tp_c = np.cumsum(tp)
    fp_c = np.cumsum(~tp)
    recall = tp_c / n_gt
    precision = tp_c / (tp_c + fp_c)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    curve = PRCurve(recall, envelope, 0.0, label)
    if interpolation == "101":
        curve.ap = float(np.mean(curve.sampled()))
    else:
        steps = np.diff(np.concatenate([[0.0], recall]))
        curve.ap = float(np.sum(steps * envelope))
    return curve


def _pinned_curve(label: str) -> PRCurve:
    return PRCurve(RECALL_GRID.copy(), np.ones_like(RECALL_GRID), 1.0, label)


def average_curves(curves, label: str = "") -> PRCurve:
    """Class-averaged curve on the 101-point recall grid; AP is the mean AP.

    An empty set of classes has nothing left to get wrong and yields the
    pinned curve with AP 1.
    """
    curves = list(curves)
    if not curves:
        return _pinned_curve(label)
    precision = np.mean([c.sampled() for c in curves], axis=0)
    ap = float(np.mean([c.ap for c in curves]))
    return PRCurve(RECALL_GRID.copy(), precision, ap, label)


def pr_curve(est: ObjectMap, gt: ObjectMap, class_id: int, iou_threshold: float,
             interpolation: str = "101") -> PRCurve | None:
    """PR curve of one class at one IoU threshold.

    Returns ``None`` when the class appears in neither map.
    """
    iou, est_cls, conf, gt_cls = _labels(est, gt)
    sw = _sweep(iou, est_cls, conf, gt_cls, class_id)
    if sw.det.size == 0 and sw.gt.size == 0:
        return None
    tp = _greedy(sw.iou, iou_threshold) >= 0
    return curve_from_flags(tp, sw.gt.size, interpolation)


def map3d(est: ObjectMap, gt: ObjectMap, interpolation: str = "101") -> MapScores:
    """AP for every class in either map at IoU thresholds 0.25:0.05:0.95.

    Classes with detections but no ground truth score AP 0; classes in
    neither map are skipped. With no classes at all the scores are 1.
    """
    iou, est_cls, conf, gt_cls = _labels(est, gt)
    per_class = {}
    for c in _eval_classes(est_cls, gt_cls):
        sw = _sweep(iou, est_cls, conf, gt_cls, c)
        per_class[c] = np.array([
            curve_from_flags(_greedy(sw.iou, t) >= 0, sw.gt.size, interpolation).ap
            for t in THRESHOLDS
        ])
    if not per_class:
        return MapScores(1.0, 1.0, 1.0, {})
    table = np.stack(list(per_class.values()))
    i25 = int(np.flatnonzero(THRESHOLDS == 0.25)[0])
    i50 = int(np.flatnonzero(THRESHOLDS == 0.5)[0])
    return MapScores(float(table.mean()), float(table[:, i25].mean()),
                     float(table[:, i50].mean()), per_class)


# --- error breakdown -------------------------------------------------------------

def _pooled_curve(entries, n_gt, interpolation, label):
    # entries: (confidence, best IoU, est index, tp flag)
    entries = sorted(entries, key=lambda e: (-e[0], -e[1], e[2]))
    return curve_from_flags([e[3] for e in entries], n_gt, interpolation, label)


def error_breakdown_curves(est: ObjectMap, gt: ObjectMap, pooled: bool = False,
                           interpolation: str = "101") -> dict[str, PRCurve]:
    """Error-breakdown PR curves keyed by ``BREAKDOWN_LABELS``.

    IoU75/IoU50/IoU25 are plain curves at those thresholds. Loc uses IoU
    0.10 and drops duplicate detections (unmatched detections overlapping a
    claimed same-class object by at least 0.10). BG additionally drops
    detections with zero IoU against every same-class object. FN removes
    every remaining error and is pinned at precision 1.
    """
    iou, est_cls, conf, gt_cls = _labels(est, gt)
    classes = _eval_classes(est_cls, gt_cls)
    sweeps = {c: _sweep(iou, est_cls, conf, gt_cls, c) for c in classes}

    stages = {}
    for label, t in (("IoU75", 0.75), ("IoU50", 0.50), ("IoU25", 0.25)):
        stages[label] = {c: (np.ones(sw.det.size, bool), _greedy(sw.iou, t) >= 0)
                         for c, sw in sweeps.items()}
    loc, bg = {}, {}
    for c, sw in sweeps.items():
        tp = _greedy(sw.iou, LOC_THRESHOLD) >= 0
        keep_loc = tp | (sw.best < LOC_THRESHOLD)
        loc[c] = (keep_loc, tp)
        bg[c] = (keep_loc & (tp | (sw.best > 0.0)), tp)
    stages["Loc"] = loc
    stages["BG"] = bg

    curves = {}
    for label, per_class in stages.items():
        if pooled:
            entries, n_gt = [], 0
            for c, (keep, tp) in per_class.items():
                sw = sweeps[c]
                n_gt += sw.gt.size
                entries += [(sw.conf[k], sw.best[k], int(sw.det[k]), bool(tp[k]))
                            for k in np.flatnonzero(keep)]
            if not entries and n_gt == 0:
                curves[label] = _pinned_curve(label)
            else:
                curves[label] = _pooled_curve(entries, n_gt, interpolation, label)
        else:
            class_curves = [curve_from_flags(tp[keep], sweeps[c].gt.size, interpolation)
                            for c, (keep, tp) in per_class.items()
                            if keep.any() or sweeps[c].gt.size]
            curves[label] = average_curves(class_curves, label)
    curves["FN"] = _pinned_curve("FN")
    return {k: curves[k] for k in BREAKDOWN_LABELS}
