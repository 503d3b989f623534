"""Axis-aligned cuboids, rigid poses and the 3D IoU kernel.

Cuboids are world-axis-aligned boxes given by a centroid and full side
lengths. Quaternions are stored as (w, x, y, z), Hamilton convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EXTENT_FLOOR = 1e-6


def _vec3(value, name):
    arr = np.array(value, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(eq=False)
class Cuboid:
    """Axis-aligned box with a class label distribution.

    ``label_probs`` is indexed by class id with index 0 reserved for
    background. When it is ``None`` a one-hot distribution on ``class_id``
    is implied.
    """

    centroid: np.ndarray
    extent: np.ndarray
    class_id: int = 0
    label_probs: np.ndarray | None = None
    confidence: float = 1.0

    def __post_init__(self):
        self.centroid = _vec3(self.centroid, "centroid")
        self.extent = _vec3(self.extent, "extent")
        if np.any(self.extent <= 0):
            raise ValueError(f"extent components must be positive, got {self.extent.tolist()}")
        self.class_id = int(self.class_id)
        if self.class_id < 0:
            raise ValueError("class_id must be non-negative")
        self.confidence = float(self.confidence)
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")
        if self.label_probs is not None:
            probs = np.asarray(self.label_probs, dtype=np.float64).reshape(-1)
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-6:
                raise ValueError("label_probs must be non-negative and sum to 1")
            if self.class_id >= probs.size or probs[self.class_id] < probs.max():
                raise ValueError("class_id must be the argmax of label_probs")
            self.label_probs = probs

    @property
    def lo(self) -> np.ndarray:
        return self.centroid - self.extent / 2.0

    @property
    def hi(self) -> np.ndarray:
        return self.centroid + self.extent / 2.0

    def prob(self, class_id: int) -> float:
        """Probability this cuboid assigns to ``class_id``."""
        if self.label_probs is None:
            return 1.0 if class_id == self.class_id else 0.0
        if 0 <= class_id < self.label_probs.size:
            return float(self.label_probs[class_id])
        return 0.0

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.all((pts >= self.lo - tol) & (pts <= self.hi + tol), axis=1)


def cuboid_volume(c: Cuboid) -> float:
    return float(np.prod(c.extent))


def _overlap_sides(a_lo, a_hi, a_ext, b_lo, b_hi, b_ext):
    # nested intervals use the inner extent exactly, so identical boxes give IoU 1
    side = np.minimum(a_hi, b_hi) - np.maximum(a_lo, b_lo)
    side = np.where((a_lo >= b_lo) & (a_hi <= b_hi), a_ext, side)
    side = np.where((b_lo >= a_lo) & (b_hi <= a_hi), b_ext, side)
    return np.minimum(side, np.minimum(a_ext, b_ext))


def overlap_volume(a: Cuboid, b: Cuboid) -> float:
    side = _overlap_sides(a.lo, a.hi, a.extent, b.lo, b.hi, b.extent)
    if np.any(side <= 0):
        return 0.0
    return float(np.prod(side))


def iou3d(a: Cuboid, b: Cuboid) -> float:
    """Intersection volume over union volume of two axis-aligned cuboids."""
    inter = overlap_volume(a, b)
    if inter == 0.0:
        return 0.0
    return min(1.0, inter / (cuboid_volume(a) + cuboid_volume(b) - inter))


def iou_matrix(est, gt) -> np.ndarray:
    """Pairwise 3D IoU, shape ``(len(est), len(gt))``."""
    if len(est) == 0 or len(gt) == 0:
        return np.zeros((len(est), len(gt)))
    a_lo = np.stack([c.lo for c in est])[:, None, :]
    a_hi = np.stack([c.hi for c in est])[:, None, :]
    b_lo = np.stack([c.lo for c in gt])[None, :, :]
    b_hi = np.stack([c.hi for c in gt])[None, :, :]
    a_ext = np.stack([c.extent for c in est])[:, None, :]
    b_ext = np.stack([c.extent for c in gt])[None, :, :]
    side = _overlap_sides(a_lo, a_hi, a_ext, b_lo, b_hi, b_ext)
    inter = np.prod(np.clip(side, 0.0, None), axis=2)
    va = np.array([cuboid_volume(c) for c in est])[:, None]
    vb = np.array([cuboid_volume(c) for c in gt])[None, :]
    return np.minimum(1.0, inter / (va + vb - inter))


def fit_axis_aligned_cuboid(points, class_id: int = 0, confidence: float = 1.0,
                            label_probs=None) -> Cuboid:
    """Tightest axis-aligned box around ``points``.

    Extents are floored at ``EXTENT_FLOOR`` so flat or single-point sets
    still give a positive volume. The box is widened by at most a few ulps
    when needed so that every input point lies inside the closed box.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        raise ValueError("empty instance")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    centroid = (lo + hi) / 2.0
    extent = np.maximum(hi - lo, EXTENT_FLOOR)
    for k in range(3):
        while centroid[k] - extent[k] / 2.0 > lo[k] or centroid[k] + extent[k] / 2.0 < hi[k]:
            extent[k] = np.nextafter(extent[k], np.inf)
    return Cuboid(centroid, extent, class_id=class_id, label_probs=label_probs,
                  confidence=confidence)


# --- rigid poses -----------------------------------------------------------

def quat_multiply(q1, q2) -> np.ndarray:
    """Hamilton product of (w, x, y, z) quaternions."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(R) -> np.ndarray:
    """Rotation matrix to a unit (w, x, y, z) quaternion with w >= 0."""
    R = np.asarray(R, dtype=np.float64)
    tr = np.trace(R)
    if tr > 0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def axis_angle_quat(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0.0 or angle == 0.0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = angle / 2.0
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / n])


def rotation_angle(q) -> float:
    """Rotation angle in radians of a unit quaternion, in [0, pi]."""
    q = np.asarray(q, dtype=np.float64)
    return 2.0 * float(np.arctan2(np.linalg.norm(q[1:]), abs(q[0])))


@dataclass(frozen=True, eq=False)
class RigidPose:
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self):
        t = _vec3(self.translation, "translation")
        q = np.array(self.rotation, dtype=np.float64).reshape(-1)
        if q.shape != (4,):
            raise ValueError("rotation must be a (w, x, y, z) quaternion")
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValueError(f"rotation quaternion must have unit norm, got {np.linalg.norm(q)}")
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", q)

    @classmethod
    def identity(cls) -> RigidPose:
        return cls()

    @classmethod
    def from_matrix(cls, T) -> RigidPose:
        T = np.asarray(T, dtype=np.float64)
        return cls(T[:3, 3], matrix_to_quat(T[:3, :3]))

    @property
    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def as_matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation_matrix
        T[:3, 3] = self.translation
        return T

    def __matmul__(self, other: RigidPose) -> RigidPose:
        return compose(self, other)


def _unit(q):
    return q / np.linalg.norm(q)


def compose(a: RigidPose, b: RigidPose) -> RigidPose:
    """``a ∘ b``: apply ``b`` first, then ``a``."""
    q = _unit(quat_multiply(a.rotation, b.rotation))
    t = a.rotation_matrix @ b.translation + a.translation
    return RigidPose(t, q)


def inverse(p: RigidPose) -> RigidPose:
    q_inv = p.rotation * np.array([1.0, -1.0, -1.0, -1.0])
    t = -(quat_to_matrix(q_inv) @ p.translation)
    return RigidPose(t, q_inv)


def apply(p: RigidPose, x) -> np.ndarray:
    """Transform a point, or an ``(N, 3)`` array of points."""
    x = np.asarray(x, dtype=np.float64)
    return x @ p.rotation_matrix.T + p.translation
