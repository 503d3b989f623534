"""Parametric segmentation and pose corruption."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation, binary_erosion

from semmap.geometry import RigidPose, axis_angle_quat, compose, inverse
from semmap.sim.render import Frame
from semmap.trajectory import Trajectory


@dataclass(frozen=True)
class SegNoiseParams:
    """Per-object, per-frame label corruption.

    ``boundary_erode_dilate`` is signed: negative erodes masks into
    background, positive grows them onto background pixels.
    """

    misclass_rate: float = 0.1
    dropout_rate: float = 0.2
    boundary_erode_dilate: int = 1
    confusion_seed: int = 0

    def __post_init__(self):
        for name in ("misclass_rate", "dropout_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def is_identity(self) -> bool:
        return self.misclass_rate == 0 and self.dropout_rate == 0 and self.boundary_erode_dilate == 0


@dataclass(frozen=True)
class PoseNoiseParams:
    """Random-walk odometry drift.

    Sigmas are RMS magnitudes of the per-frame translation (meters) and
    rotation (degrees) increments, so RPE over one frame recovers them.
    """

    trans_drift_sigma: float = 0.01
    rot_drift_sigma: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.trans_drift_sigma < 0 or self.rot_drift_sigma < 0:
            raise ValueError("drift sigmas must be non-negative")

    @property
    def is_identity(self) -> bool:
        return self.trans_drift_sigma == 0 and self.rot_drift_sigma == 0


def confusion_map(n_classes: int, seed: int) -> np.ndarray:
    """Seeded map from each class id in 1..n-1 to a different class id."""
    rng = np.random.default_rng(seed)
    out = np.zeros(n_classes, dtype=np.int64)
    for c in range(1, n_classes):
        if n_classes <= 2:
            out[c] = c
            continue
        other = int(rng.integers(1, n_classes - 1))
        out[c] = other + 1 if other >= c else other
    return out


def perturb_segmentation(frame: Frame, params: SegNoiseParams, rng: np.random.Generator,
                         n_classes: int = 31) -> Frame:
    """Corrupt the label images of ``frame``; depth and pose are untouched.

    Objects are visited in instance-id order. Each draws a dropout and a
    misclassification variate; dropped masks become background, misclassified
    masks take the class's confusion partner. Masks are then eroded or
    dilated by ``abs(boundary_erode_dilate)`` pixels.
    """
    cls = frame.class_image.copy()
    inst = frame.instance_image.copy()
    if params.is_identity:
        return Frame(frame.depth, cls, inst, frame.pose, frame.class_probs)
    confusion = confusion_map(n_classes, params.confusion_seed)
    ids = [int(i) for i in np.unique(frame.instance_image) if i != 0]
    for i in ids:
        mask = frame.instance_image == i
        u_drop, u_mis = rng.random(2)
        if u_drop < params.dropout_rate:
            cls[mask] = 0
            inst[mask] = 0
        elif u_mis < params.misclass_rate:
            cls[mask] = confusion[cls[mask][0]]
    k = params.boundary_erode_dilate
    if k != 0:
        free = (frame.depth > 0) & (frame.instance_image == 0)
        out_cls, out_inst = cls.copy(), inst.copy()
        for i in ids:
            mask = inst == i
            if not mask.any():
                continue
            c = cls[mask][0]
            if k < 0:
                kept = binary_erosion(mask, iterations=-k, border_value=1)
                lost = mask & ~kept
                out_cls[lost] = 0
                out_inst[lost] = 0
            else:
                grown = binary_dilation(mask, iterations=k) & free & (out_inst == 0)
                out_cls[grown] = c
                out_inst[grown] = i
        cls, inst = out_cls, out_inst
    return Frame(frame.depth, cls, inst, frame.pose, frame.class_probs)


def perturb_trajectory(traj: Trajectory, params: PoseNoiseParams,
                       rng: np.random.Generator) -> Trajectory:
    """Odometry-style drift: each ground-truth step gets a random increment.

    ``est[k] = est[k-1] * (gt[k-1]^-1 * gt[k]) * noise[k]`` with
    ``est[0] = gt[0]``, so errors accumulate along the path.
    """
    if params.is_identity or len(traj) < 2:
        return Trajectory(traj.timestamps.copy(), traj.positions.copy(), traj.quaternions.copy())
    n = len(traj)
    t_sd = params.trans_drift_sigma / np.sqrt(3.0)
    r_sd = np.radians(params.rot_drift_sigma) / np.sqrt(3.0)
    dt = rng.normal(0.0, 1.0, size=(n - 1, 3)) * t_sd
    dr = rng.normal(0.0, 1.0, size=(n - 1, 3)) * r_sd
    gt = traj.poses
    est = [gt[0]]
    for k in range(1, n):
        step = compose(inverse(gt[k - 1]), gt[k])
        angle = float(np.linalg.norm(dr[k - 1]))
        noise = RigidPose(dt[k - 1], axis_angle_quat(dr[k - 1], angle))
        est.append(compose(compose(est[-1], step), noise))
    return Trajectory.from_poses(traj.timestamps.copy(), est)
