"""Absolute trajectory error and relative pose error."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from semmap.errors import EvaluationError
from semmap.geometry import RigidPose, compose, inverse, matrix_to_quat, rotation_angle


@dataclass(eq=False)
class Trajectory:
    """Time-stamped camera poses. Quaternions are (w, x, y, z)."""

    timestamps: np.ndarray
    positions: np.ndarray
    quaternions: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64).reshape(-1)
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.quaternions = np.asarray(self.quaternions, dtype=np.float64).reshape(-1, 4)
        n = self.timestamps.size
        if self.positions.shape[0] != n or self.quaternions.shape[0] != n:
            raise ValueError("timestamps, positions and quaternions must have equal length")
        if n > 1 and np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    @classmethod
    def from_poses(cls, timestamps, poses) -> Trajectory:
        poses = list(poses)
        return cls(timestamps,
                   np.array([p.translation for p in poses]).reshape(-1, 3),
                   np.array([p.rotation for p in poses]).reshape(-1, 4))

    def __len__(self):
        return self.timestamps.size

    def pose(self, i: int) -> RigidPose:
        return RigidPose(self.positions[i], self.quaternions[i])

    @property
    def poses(self) -> list[RigidPose]:
        return [self.pose(i) for i in range(len(self))]


@dataclass(eq=False)
class PosePairs:
    """Temporally associated estimate/ground-truth samples, in time order."""

    est: Trajectory
    gt: Trajectory

    def __len__(self):
        return len(self.est)


@dataclass
class TrajError:
    ate_rmse: float
    rpe_trans_rmse: float
    rpe_rot_rmse: float
    trajectory_length: float


def associate(est: Trajectory, gt: Trajectory, max_dt: float = 0.02) -> PosePairs:
    """Greedy nearest-timestamp association; each sample used at most once."""
    if not max_dt > 0:
        raise ValueError("max_dt must be positive")
    lo = np.searchsorted(gt.timestamps, est.timestamps - max_dt, side="left")
    hi = np.searchsorted(gt.timestamps, est.timestamps + max_dt, side="right")
    cand = [(abs(est.timestamps[i] - gt.timestamps[j]), i, j)
            for i in range(len(est)) for j in range(lo[i], hi[i])]
    cand.sort()
    used_e, used_g, pairs = set(), set(), []
    for _, i, j in cand:
        if i not in used_e and j not in used_g:
            used_e.add(i)
            used_g.add(j)
            pairs.append((i, j))
    if not pairs:
        raise EvaluationError("no temporal overlap")
    pairs.sort()
    ie = np.array([p[0] for p in pairs])
    ig = np.array([p[1] for p in pairs])
    return PosePairs(
        Trajectory(est.timestamps[ie], est.positions[ie], est.quaternions[ie]),
        Trajectory(gt.timestamps[ig], gt.positions[ig], gt.quaternions[ig]),
    )


def align_horn(pairs: PosePairs) -> RigidPose:
    """Rigid transform T minimising sum |T est_i - gt_i|^2 over positions."""
    if len(pairs) < 1:
        raise EvaluationError("alignment needs at least one pose pair")
    src = pairs.est.positions
    dst = pairs.gt.positions
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    cov = (dst - mu_d).T @ (src - mu_s)
    U, _, Vt = np.linalg.svd(cov)
    D = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        D[2, 2] = -1.0
    R = U @ D @ Vt
    t = mu_d - R @ mu_s
    return RigidPose(t, matrix_to_quat(R))


def ate_rmse(pairs: PosePairs, align: bool = True) -> float:
    if len(pairs) < 1:
        raise EvaluationError("ATE needs at least one pose pair")

    def rmse(est):
        residual = est - pairs.gt.positions
        return float(np.sqrt(np.mean(np.sum(residual ** 2, axis=1))))

    raw = rmse(pairs.est.positions)
    if not align:
        return raw
    T = align_horn(pairs)
    # identity is a feasible alignment, so never report worse than raw
    return min(raw, rmse(pairs.est.positions @ T.rotation_matrix.T + T.translation))


def _relative(traj: Trajectory, i: int, j: int) -> RigidPose:
    return compose(inverse(traj.pose(i)), traj.pose(j))


def rpe(pairs: PosePairs, delta: int = 1) -> tuple[float, float]:
    """RMSE of relative-motion error over frame gap ``delta``.

    Returns (translation in meters, rotation in degrees).
    """
    if delta < 1:
        raise ValueError("delta must be at least 1")
    n = len(pairs)
    if n < delta + 1:
        raise EvaluationError(f"RPE with delta={delta} needs at least {delta + 1} pose pairs")
    trans, rot = [], []
    for i in range(n - delta):
        g = _relative(pairs.gt, i, i + delta)
        e = _relative(pairs.est, i, i + delta)
        err = compose(inverse(g), e)
        trans.append(np.linalg.norm(err.translation))
        rot.append(rotation_angle(err.rotation))
    trans = np.array(trans)
    rot = np.degrees(np.array(rot))
    return float(np.sqrt(np.mean(trans ** 2))), float(np.sqrt(np.mean(rot ** 2)))


def trajectory_length(traj: Trajectory) -> float:
    if len(traj) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(traj.positions, axis=0), axis=1)))


def evaluate_trajectory(est: Trajectory, gt: Trajectory, max_dt: float = 0.02,
                        align: bool = True, delta: int = 1) -> TrajError:
    pairs = associate(est, gt, max_dt)
    t_rmse, r_rmse = rpe(pairs, delta)
    return TrajError(ate_rmse(pairs, align), t_rmse, r_rmse, trajectory_length(gt))

