"""Depth and label images by ray casting against axis-aligned boxes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from semmap.geometry import RigidPose
from semmap.sim.scene import Scene


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float = 80.0
    fy: float = 80.0
    cx: float = 47.5
    cy: float = 35.5
    width: int = 96
    height: int = 72
    near: float = 0.1
    far: float = 10.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not 0 <= self.near < self.far:
            raise ValueError("depth range must satisfy 0 <= near < far")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be positive")

    def pixel_rays(self) -> np.ndarray:
        """Camera-frame ray per pixel, scaled so the z component is 1."""
        v, u = np.mgrid[0:self.height, 0:self.width].astype(np.float64)
        return np.stack([(u - self.cx) / self.fx, (v - self.cy) / self.fy,
                         np.ones_like(u)], axis=-1)


@dataclass(eq=False)
class Frame:
    """Rendered depth (meters, 0 = invalid) and label images.

    ``class_probs`` optionally carries a per-pixel class distribution of
    shape ``(H, W, C)`` for probability-mode fusion.
    """

    depth: np.ndarray
    class_image: np.ndarray
    instance_image: np.ndarray
    pose: RigidPose
    class_probs: np.ndarray | None = None


def ray_box_interval(origin, dirs, lo, hi):
    """Slab test: entry and exit ray parameters for each ray.

    ``dirs`` has shape ``(..., 3)``; a ray misses when entry > exit.
    """
    origin = np.asarray(origin, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t0 = (lo - origin) * inv
        t1 = (hi - origin) * inv
    tmin = np.minimum(t0, t1)
    tmax = np.maximum(t0, t1)
    parallel = dirs == 0
    inside = (origin >= lo) & (origin <= hi)
    tmin = np.where(parallel, np.where(inside, -np.inf, np.inf), tmin)
    tmax = np.where(parallel, np.where(inside, np.inf, -np.inf), tmax)
    return tmin.max(axis=-1), tmax.min(axis=-1)


def render_frame(scene: Scene, pose: RigidPose, intr: CameraIntrinsics,
                 walls: bool = True) -> Frame:
    """Render from camera-to-world ``pose``; the nearest hit in range wins.

    With ``walls`` the room's floor, walls and ceiling return background
    depth, so label errors can spill onto them.
    """
    rays = intr.pixel_rays() @ pose.rotation_matrix.T
    origin = pose.translation
    shape = (intr.height, intr.width)
    depth = np.full(shape, np.inf)
    cls = np.zeros(shape, dtype=np.int64)
    inst = np.zeros(shape, dtype=np.int64)
    for obj in scene.objects:
        t_in, t_out = ray_box_interval(origin, rays, obj.cuboid.lo, obj.cuboid.hi)
        hit = (t_in <= t_out) & (t_in >= intr.near) & (t_in <= intr.far) & (t_in < depth)
        depth[hit] = t_in[hit]
        cls[hit] = obj.class_id
        inst[hit] = obj.instance_id
    if walls:
        _, t_out = ray_box_interval(origin, rays, scene.room_lo, scene.room_hi)
        hit = (t_out >= intr.near) & (t_out <= intr.far) & (t_out < depth)
        depth[hit] = t_out[hit]
    depth[~np.isfinite(depth)] = 0.0
    return Frame(depth, cls, inst, pose)


def backproject(frame: Frame, intr: CameraIntrinsics):
    """World points of valid pixels and the boolean mask selecting them."""
    valid = frame.depth > 0
    pts_cam = intr.pixel_rays()[valid] * frame.depth[valid][:, None]
    pose = frame.pose
    return pts_cam @ pose.rotation_matrix.T + pose.translation, valid
