"""Instance extraction from class-labelled point clouds.

Class-level clouds are split per class and segmented into instances by
single-linkage Euclidean clustering; each surviving cluster becomes one
axis-aligned cuboid.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from semmap.geometry import fit_axis_aligned_cuboid
from semmap.quality.objectmap import ObjectMap
from semmap.vocabulary import BACKGROUND_ID, DEFAULT_VOCABULARY


@dataclass(eq=False)
class LabeledPointCloud:
    positions: np.ndarray
    class_ids: np.ndarray
    instance_ids: np.ndarray | None = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.class_ids = np.asarray(self.class_ids, dtype=np.int64).reshape(-1)
        if self.class_ids.size != self.positions.shape[0]:
            raise ValueError("one class id per point required")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("point positions must be finite")
        if np.any(self.class_ids < 0):
            raise ValueError("class ids must be non-negative")
        if self.instance_ids is not None:
            self.instance_ids = np.asarray(self.instance_ids, dtype=np.int64).reshape(-1)
            if self.instance_ids.size != self.positions.shape[0]:
                raise ValueError("one instance id per point required")

    def __len__(self):
        return self.positions.shape[0]

    @classmethod
    def empty(cls) -> LabeledPointCloud:
        return cls(np.zeros((0, 3)), np.zeros(0, dtype=np.int64))


@dataclass(frozen=True)
class ClusterParams:
    max_link_distance: float = 0.10
    min_cluster_points: int = 20

    def __post_init__(self):
        if not self.max_link_distance > 0:
            raise ValueError("max_link_distance must be positive")
        if self.min_cluster_points < 1:
            raise ValueError("min_cluster_points must be at least 1")


def split_by_class(cloud: LabeledPointCloud) -> dict[int, np.ndarray]:
    return {int(c): cloud.positions[cloud.class_ids == c]
            for c in np.unique(cloud.class_ids)}


_HALF_NEIGHBOURHOOD = [d for d in itertools.product((-1, 0, 1), repeat=3) if d > (0, 0, 0)]


def _link_pairs(points: np.ndarray, r: float):
    """All index pairs within distance ``r``, via a hash grid of cell size ``r``."""
    cells = np.floor(points / r).astype(np.int64)
    buckets: dict[tuple, list[int]] = {}
    for i, key in enumerate(map(tuple, cells)):
        buckets.setdefault(key, []).append(i)
    buckets = {k: np.array(v) for k, v in buckets.items()}
    r2 = r * r
    rows, cols = [], []

    def link(a, b):
        d2 = ((points[a][:, None, :] - points[b][None, :, :]) ** 2).sum(axis=2)
        ia, ib = np.nonzero(d2 <= r2)
        rows.append(a[ia])
        cols.append(b[ib])

    for key, members in buckets.items():
        link(members, members)
        for d in _HALF_NEIGHBOURHOOD:
            other = buckets.get((key[0] + d[0], key[1] + d[1], key[2] + d[2]))
            if other is not None:
                link(members, other)
    return np.concatenate(rows), np.concatenate(cols)


def connected_clusters(points, max_link_distance: float) -> list[np.ndarray]:
    """Single-linkage components as index arrays, before any size filtering.

    Components are ordered by their lexicographically smallest point.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = pts.shape[0]
    if n == 0:
        return []
    rows, cols = _link_pairs(pts, max_link_distance)
    graph = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    groups = [np.flatnonzero(labels == k) for k in range(labels.max() + 1)]

    def lex_min(idx):
        sub = pts[idx]
        return tuple(sub[np.lexsort(sub.T[::-1])[0]])

    return sorted(groups, key=lex_min)


def euclidean_cluster(points, params: ClusterParams = ClusterParams()) -> list[np.ndarray]:
    """Clusters of ``points`` (as point arrays) with at least ``min_cluster_points``."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return [pts[idx] for idx in connected_clusters(pts, params.max_link_distance)
            if idx.size >= params.min_cluster_points]


CONFIDENCE_MODES = ("unit", "support")


def extract_object_map(cloud: LabeledPointCloud, params: ClusterParams = ClusterParams(),
                       confidence_mode: str = "unit",
                       vocabulary=DEFAULT_VOCABULARY) -> ObjectMap:
    """Cluster each class of ``cloud`` and fit one cuboid per cluster.

    Labels are one-hot on the cluster's class. With ``confidence_mode="unit"``
    every cuboid gets confidence 1; ``"support"`` scales confidence by the
    cluster's point count relative to the largest cluster in the map.
    """
    if confidence_mode not in CONFIDENCE_MODES:
        raise ValueError(f"confidence_mode must be one of {CONFIDENCE_MODES}")
    found = []
    for c, pts in sorted(split_by_class(cloud).items()):
        if c == BACKGROUND_ID:
            continue
        for cluster in euclidean_cluster(pts, params):
            found.append((c, cluster))
    largest = max((len(p) for _, p in found), default=1)
    objects = []
    for c, pts in found:
        conf = 1.0 if confidence_mode == "unit" else len(pts) / largest
        objects.append(fit_axis_aligned_cuboid(pts, class_id=c, confidence=conf))
    return ObjectMap(objects, vocabulary)


def instance_map_from_ids(cloud: LabeledPointCloud, vocabulary=DEFAULT_VOCABULARY) -> ObjectMap:
    """One cuboid per instance id, labelled with the majority class of its points.

    Ties go to the lowest class id.
    """
    if cloud.instance_ids is None:
        raise ValueError("instance ids required")
    objects = []
    for inst in np.unique(cloud.instance_ids):
        mask = cloud.instance_ids == inst
        counts = np.bincount(cloud.class_ids[mask])
        objects.append(fit_axis_aligned_cuboid(cloud.positions[mask],
                                               class_id=int(np.argmax(counts))))
    return ObjectMap(objects, vocabulary)
