"""Object Map Quality: pairwise object quality, optimal assignment, FP costs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from semmap.geometry import Cuboid, iou3d, iou_matrix
from semmap.quality.detection import MapScores
from semmap.quality.objectmap import ObjectMap, check_vocabulary
from semmap.vocabulary import BACKGROUND_ID


@dataclass(eq=False)
class OmqReport:
    omq: float
    mPOQ: float
    mLQ: float
    mSQ: float
    mFPQ: float
    n_tp: int
    n_fn: int
    n_fp: int
    q_tp: list[float] = field(default_factory=list)
    c_fp: list[float] = field(default_factory=list)
    pairs: list[tuple[int, int]] = field(default_factory=list)


def label_quality(o: Cuboid, class_id: int) -> float:
    return o.prob(class_id)


def pairwise_quality(o: Cuboid, ghat: Cuboid) -> float:
    """Geometric mean of 3D IoU and the probability given to the true class."""
    q_sp = iou3d(o, ghat)
    q_l = label_quality(o, ghat.class_id)
    if q_sp == 0.0 or q_l == 0.0:
        return 0.0
    return math.sqrt(q_sp * q_l)


def fp_cost(o: Cuboid) -> float:
    """Largest probability given to any non-background class."""
    if o.label_probs is None:
        return 0.0 if o.class_id == BACKGROUND_ID else 1.0
    mask = np.arange(o.label_probs.size) != BACKGROUND_ID
    return float(o.label_probs[mask].max()) if mask.any() else 0.0


def _min_cost_square(cost: np.ndarray) -> np.ndarray:
    """Kuhn-Munkres (shortest augmenting path) on a square cost matrix.

    Returns ``col`` with ``col[i]`` the column assigned to row ``i``.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)    # p[j]: row matched to column j (1-based)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        col[p[j] - 1] = j - 1
    return col


def optimal_assignment(quality) -> list[tuple[int, int]]:
    """Row/column pairs maximising total quality; zero-quality pairs dropped."""
    q = np.asarray(quality, dtype=np.float64)
    if q.ndim != 2:
        raise ValueError("quality must be a 2D matrix")
    if np.any(q < 0):
        raise ValueError("quality must be non-negative")
    r, c = q.shape
    if r == 0 or c == 0:
        return []
    n = max(r, c)
    padded = np.zeros((n, n))
    padded[:r, :c] = q
    col = _min_cost_square(-padded)
    return [(i, int(col[i])) for i in range(r) if col[i] < c and q[i, col[i]] > 0.0]


def assignment_total(quality, pairs) -> float:
    q = np.asarray(quality, dtype=np.float64)
    return math.fsum(q[i, j] for i, j in pairs)


def omq_from_parts(q_tp, n_fn: int, c_fp) -> float:
    """Summed TP quality over TPs + FNs + summed FP cost."""
    denom = len(q_tp) + n_fn + math.fsum(c_fp)
    if denom == 0:
        return 1.0
    return math.fsum(q_tp) / denom


def quality_matrix(est: ObjectMap, gt: ObjectMap):
    iou = iou_matrix(est.objects, gt.objects)
    lq = np.array([[label_quality(o, g.class_id) for g in gt] for o in est]).reshape(iou.shape)
    return np.sqrt(iou * lq), iou, lq


def omq(est: ObjectMap, gt: ObjectMap) -> OmqReport:
    check_vocabulary(est, gt)
    q, iou, lq = quality_matrix(est, gt)
    pairs = optimal_assignment(q)
    q_tp = [float(q[i, j]) for i, j in pairs]
    assigned = {i for i, _ in pairs}
    c_fp = [fp_cost(o) for i, o in enumerate(est) if i not in assigned]
    n_tp = len(pairs)

    def mean(xs):
        return float(np.mean(xs)) if len(xs) else 0.0

    return OmqReport(
        omq=omq_from_parts(q_tp, len(gt) - n_tp, c_fp),
        mPOQ=mean(q_tp),
        mLQ=mean([lq[i, j] for i, j in pairs]),
        mSQ=mean([iou[i, j] for i, j in pairs]),
        mFPQ=mean(c_fp),
        n_tp=n_tp,
        n_fn=len(gt) - n_tp,
        n_fp=len(c_fp),
        q_tp=q_tp,
        c_fp=c_fp,
        pairs=pairs,
    )


RATIO_KEYS = ("rmAP", "rAP25", "rAP50", "rOMQ")


def ratio_scores(case_map: MapScores, case_omq: OmqReport,
                 base_map: MapScores, base_omq: OmqReport) -> dict[str, float | None]:
    """Case scores divided by baseline scores; ``None`` where the baseline is 0."""
    def ratio(a, b):
        return None if b == 0 else a / b

    return {
        "rmAP": ratio(case_map.map3d, base_map.map3d),
        "rAP25": ratio(case_map.map25, base_map.map25),
        "rAP50": ratio(case_map.map50, base_map.map50),
        "rOMQ": ratio(case_omq.omq, base_omq.omq),
    }
