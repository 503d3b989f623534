"""Builders and independent oracles shared by the test modules."""
import itertools
import math

import numpy as np
from scipy.stats import qmc

from semmap.geometry import Cuboid, iou3d
from semmap.quality import ObjectMap

FURNITURE = (5, 6, 12, 19, 20, 23)  # a few class ids from the default vocabulary


def random_cuboid(rng, class_id=1, confidence=1.0, spread=3.0):
    return Cuboid(rng.uniform(-spread, spread, 3), rng.uniform(0.2, 1.5, 3), class_id,
                  confidence=confidence)


def jittered(c: Cuboid, rng, scale=0.1, class_id=None, confidence=None):
    """Copy of ``c`` with perturbed centroid and extent."""
    return Cuboid(c.centroid + rng.normal(0.0, scale, 3),
                  np.maximum(c.extent * rng.uniform(1 - scale, 1 + scale, 3), 0.05),
                  c.class_id if class_id is None else class_id,
                  confidence=rng.uniform(0.05, 1.0) if confidence is None else confidence)


def random_map_pair(rng, n_gt=6, n_extra=3, classes=FURNITURE):
    """Ground truth plus an estimate mixing near hits, wrong classes and clutter."""
    gt = [random_cuboid(rng, int(rng.choice(classes))) for _ in range(n_gt)]
    est = []
    for g in gt:
        r = rng.random()
        if r < 0.6:
            est.append(jittered(g, rng, scale=rng.uniform(0.02, 0.4)))
        elif r < 0.75:
            est.append(jittered(g, rng, class_id=int(rng.choice(classes))))
        if rng.random() < 0.2:
            est.append(jittered(g, rng, scale=0.3))  # duplicate
    for _ in range(rng.integers(0, n_extra + 1)):
        est.append(random_cuboid(rng, int(rng.choice(classes)),
                                 confidence=float(rng.uniform(0.05, 1.0))))
    return ObjectMap(est), ObjectMap(gt)


def overlapping_pair(rng, min_iou=0.05):
    while True:
        a = Cuboid(rng.uniform(-1, 1, 3), rng.uniform(0.2, 2.0, 3))
        b = Cuboid(a.centroid + rng.uniform(-1, 1, 3), rng.uniform(0.2, 2.0, 3))
        if iou3d(a, b) > min_iou:
            return a, b


class SobolIoU:
    """Monte-Carlo IoU from one scrambled Sobol set, randomly shifted per call.

    Points are drawn in the bounding box of both cuboids and classified by
    direct containment tests, so no overlap formula is involved.
    """

    def __init__(self, n_log2=20, seed=0):
        self.base = qmc.Sobol(3, scramble=True, seed=seed).random(2 ** n_log2).T.copy()

    def __call__(self, a: Cuboid, b: Cuboid, rng) -> float:
        lo = np.minimum(a.lo, b.lo)
        span = np.maximum(a.hi, b.hi) - lo
        shift = rng.random(3)
        in_a = np.ones(self.base.shape[1], dtype=bool)
        in_b = in_a.copy()
        for k in range(3):
            x = self.base[k] + shift[k]
            x -= np.floor(x)
            x = lo[k] + x * span[k]
            in_a &= (x >= a.lo[k]) & (x <= a.hi[k])
            in_b &= (x >= b.lo[k]) & (x <= b.hi[k])
        return np.count_nonzero(in_a & in_b) / np.count_nonzero(in_a | in_b)


def brute_force_clusters(points, r):
    """O(n^2) single linkage with an explicit union-find."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        d2 = np.sum((pts[i + 1:] - pts[i]) ** 2, axis=1)
        for j in np.flatnonzero(d2 <= r * r) + i + 1:
            ri, rj = find(i), find(int(j))
            if ri != rj:
                parent[ri] = rj
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return {frozenset(g) for g in groups.values()}


def exhaustive_assignment(q):
    """Best total quality over all injective row-to-column maps, summed exactly."""
    q = np.asarray(q, dtype=np.float64)
    r, c = q.shape
    if r == 0 or c == 0:
        return 0.0
    if r <= c:
        return max(math.fsum(q[i, p[i]] for i in range(r))
                   for p in itertools.permutations(range(c), r))
    return max(math.fsum(q[p[j], j] for j in range(c))
               for p in itertools.permutations(range(r), c))


def hand_ap101(tp, n_gt):
    """101-point interpolated AP computed point by point."""
    hits = fps = 0
    pr = []
    for flag in tp:
        hits += flag
        fps += not flag
        pr.append((hits / n_gt, hits / (hits + fps)))
    total = 0.0
    for k in range(101):
        r = k / 100
        total += max([p for rec, p in pr if rec >= r - 1e-12], default=0.0)
    return total / 101


def hand_ap_all(tp, n_gt):
    """Area under the monotone envelope, summed at each recall step."""
    hits = fps = 0
    pr = []
    for flag in tp:
        hits += flag
        fps += not flag
        pr.append((hits / n_gt, hits / (hits + fps)))
    ap, prev = 0.0, 0.0
    for k, (rec, _) in enumerate(pr):
        env = max(p for _, p in pr[k:])
        ap += (rec - prev) * env
        prev = rec
    return ap
