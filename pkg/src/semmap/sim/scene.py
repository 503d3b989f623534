"""Synthetic rooms of axis-aligned objects and camera paths through them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from semmap.geometry import Cuboid, RigidPose, matrix_to_quat
from semmap.quality.objectmap import ObjectMap
from semmap.trajectory import Trajectory
from semmap.vocabulary import DEFAULT_VOCABULARY, FURNITURE_CLASSES, class_id

DEFAULT_ROOM = ((0.0, 0.0, 0.0), (6.0, 6.0, 3.0))


@dataclass(eq=False)
class SceneObject:
    cuboid: Cuboid
    instance_id: int

    @property
    def class_id(self) -> int:
        return self.cuboid.class_id


@dataclass(eq=False)
class Scene:
    objects: list[SceneObject] = field(default_factory=list)
    room_lo: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_ROOM[0]))
    room_hi: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_ROOM[1]))
    vocabulary: tuple[str, ...] = DEFAULT_VOCABULARY

    def __post_init__(self):
        self.room_lo = np.asarray(self.room_lo, dtype=np.float64)
        self.room_hi = np.asarray(self.room_hi, dtype=np.float64)
        ids = [o.instance_id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("instance ids must be unique")
        if any(i <= 0 for i in ids):
            raise ValueError("instance ids must be positive (0 is background)")
        for o in self.objects:
            if np.any(o.cuboid.lo < self.room_lo - 1e-9) or np.any(o.cuboid.hi > self.room_hi + 1e-9):
                raise ValueError(f"object {o.instance_id} lies outside the room")

    def ground_truth_map(self) -> ObjectMap:
        return ObjectMap([o.cuboid for o in self.objects], self.vocabulary)


def _separated(a_lo, a_hi, b_lo, b_hi, gap):
    return bool(np.any((a_hi + gap <= b_lo) | (b_hi + gap <= a_lo)))


def generate_scene(seed: int, n_objects=(5, 5), classes=FURNITURE_CLASSES,
                   room=DEFAULT_ROOM, extent_range=(0.4, 1.0), margin: float = 1.2,
                   gap: float = 0.3, max_tries: int = 2000,
                   vocabulary=DEFAULT_VOCABULARY) -> Scene:
    """Random non-overlapping floor-standing boxes in a rectangular room.

    Objects keep ``margin`` from the walls and at least ``gap`` from each
    other along some axis, so distinct objects never touch.
    """
    rng = np.random.default_rng(seed)
    lo, hi = np.asarray(room[0], float), np.asarray(room[1], float)
    n_min, n_max = n_objects
    if n_min < 0 or n_max < n_min:
        raise ValueError("invalid object count range")
    n = int(rng.integers(n_min, n_max + 1))
    class_ids = [class_id(c, vocabulary) for c in classes]
    placed: list[SceneObject] = []
    tries = 0
    while len(placed) < n:
        tries += 1
        if tries > max_tries:
            raise ValueError(f"could not place {n} objects after {max_tries} attempts")
        ext = rng.uniform(extent_range[0], extent_range[1], size=3)
        ext[2] = min(ext[2], hi[2] - lo[2])
        xy_lo = lo[:2] + margin + ext[:2] / 2
        xy_hi = hi[:2] - margin - ext[:2] / 2
        if np.any(xy_hi < xy_lo):
            continue
        xy = rng.uniform(xy_lo, xy_hi)
        centroid = np.array([xy[0], xy[1], lo[2] + ext[2] / 2])
        cid = int(rng.choice(class_ids))
        cand = Cuboid(centroid, ext, class_id=cid)
        if all(_separated(cand.lo, cand.hi, o.cuboid.lo, o.cuboid.hi, gap) for o in placed):
            placed.append(SceneObject(cand, len(placed) + 1))
    return Scene(placed, lo, hi, tuple(vocabulary))


def look_at(position, target, up=(0.0, 0.0, 1.0)) -> RigidPose:
    """Camera-to-world pose; camera x right, y down, z forward."""
    position = np.asarray(position, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - position
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, up)
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.column_stack([right, down, forward])
    return RigidPose(position, matrix_to_quat(R))


def generate_trajectory(scene: Scene, n_frames: int, seed: int, rate: float = 30.0,
                        target_height: float = 0.4) -> Trajectory:
    """Closed orbit around the room centre, looking at the middle of the floor.

    Radius, height, phase and direction are drawn from ``seed``.
    """
    if n_frames < 2:
        raise ValueError("a trajectory needs at least 2 frames")
    rng = np.random.default_rng(seed)
    center = (scene.room_lo + scene.room_hi) / 2
    half = (scene.room_hi - scene.room_lo) / 2
    radius = min(half[0], half[1]) * rng.uniform(0.78, 0.9)
    height = scene.room_lo[2] + rng.uniform(1.5, 1.8)
    bob = rng.uniform(0.0, 0.1)
    phase = rng.uniform(0.0, 2 * np.pi)
    direction = rng.choice([-1.0, 1.0])
    angles = phase + direction * np.linspace(0.0, 2 * np.pi, n_frames, endpoint=False)
    target = np.array([center[0], center[1], scene.room_lo[2] + target_height])
    poses = []
    for a in angles:
        pos = np.array([center[0] + radius * np.cos(a), center[1] + radius * np.sin(a),
                        height + bob * np.sin(3 * a)])
        poses.append(look_at(pos, target))
    return Trajectory.from_poses(np.arange(n_frames) / rate, poses)
