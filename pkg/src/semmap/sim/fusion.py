"""Bayesian per-voxel label fusion.

Each voxel keeps a normalized class distribution (stored as log
probabilities) and an observation count. Every back-projected pixel is one
observation; its likelihood is multiplied into the voxel's distribution,
which is then renormalized.
"""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from semmap.instances import LabeledPointCloud
from semmap.sim.render import CameraIntrinsics, Frame, backproject

GT_EPSILON = 1e-3
PROB_MODES = ("label", "probs")


class VoxelLabelGrid:
    """Sparse dense-indexed voxel grid; only observed voxels are stored."""

    def __init__(self, origin, voxel_size: float, dims, n_classes: int,
                 epsilon: float = GT_EPSILON):
        if voxel_size <= 0:
            raise ValueError("voxel_size must be positive")
        if n_classes < 2:
            raise ValueError("need background plus at least one class")
        self.origin = np.asarray(origin, dtype=np.float64)
        self.voxel_size = float(voxel_size)
        self.dims = np.asarray(dims, dtype=np.int64)
        self.n_classes = int(n_classes)
        self.epsilon = float(epsilon)
        self.skipped = 0
        self._rows: dict[int, int] = {}
        self._keys = np.zeros(0, dtype=np.int64)
        self._logp = np.zeros((0, n_classes))
        self._count = np.zeros(0, dtype=np.int64)
        self._size = 0

    @classmethod
    def covering(cls, lo, hi, voxel_size: float, n_classes: int, margin=None, **kw):
        """Grid spanning the box [lo, hi] plus ``margin`` (one voxel by default)."""
        margin = voxel_size if margin is None else margin
        lo = np.asarray(lo, dtype=np.float64) - margin
        hi = np.asarray(hi, dtype=np.float64) + margin
        dims = np.ceil((hi - lo) / voxel_size).astype(np.int64)
        return cls(lo, voxel_size, dims, n_classes, **kw)

    def __len__(self):
        return self._size

    def flat_index(self, points):
        """Flat voxel keys for ``points`` and a mask of those inside the grid."""
        ijk = np.floor((np.asarray(points) - self.origin) / self.voxel_size).astype(np.int64)
        inside = np.all((ijk >= 0) & (ijk < self.dims), axis=1)
        keys = np.ravel_multi_index(ijk[inside].T, self.dims) if inside.any() else np.zeros(0, np.int64)
        return keys, inside

    def centers(self, keys) -> np.ndarray:
        ijk = np.stack(np.unravel_index(np.asarray(keys, dtype=np.int64), self.dims), axis=1)
        return self.origin + (ijk + 0.5) * self.voxel_size

    def _rows_for(self, keys: np.ndarray) -> np.ndarray:
        rows = np.empty(keys.size, dtype=np.int64)
        for n, k in enumerate(keys.tolist()):
            r = self._rows.get(k)
            if r is None:
                r = self._append(k)
            rows[n] = r
        return rows

    def _append(self, key: int) -> int:
        if self._size == self._keys.size:
            cap = max(1024, 2 * self._keys.size)
            self._keys = np.resize(self._keys, cap)
            self._count = np.resize(self._count, cap)
            logp = np.empty((cap, self.n_classes))
            logp[:self._size] = self._logp[:self._size]
            self._logp = logp
        r = self._size
        self._keys[r] = key
        self._count[r] = 0
        self._logp[r] = -np.log(self.n_classes)
        self._rows[key] = r
        self._size += 1
        return r

    def update(self, keys, loglik, counts):
        """Multiply per-voxel likelihoods (given in log form) and renormalize.

        ``keys`` must be unique; ``loglik`` has one row per key.
        """
        rows = self._rows_for(np.asarray(keys, dtype=np.int64))
        logp = self._logp[rows] + loglik
        self._logp[rows] = logp - logsumexp(logp, axis=1, keepdims=True)
        self._count[rows] += counts

    @property
    def keys(self) -> np.ndarray:
        return self._keys[:self._size]

    @property
    def counts(self) -> np.ndarray:
        return self._count[:self._size]

    def probabilities(self) -> np.ndarray:
        return np.exp(self._logp[:self._size])

    def log_probabilities(self) -> np.ndarray:
        return self._logp[:self._size]

    def distribution(self, key: int) -> np.ndarray:
        r = self._rows.get(int(key))
        if r is None:
            return np.full(self.n_classes, 1.0 / self.n_classes)
        return np.exp(self._logp[r])


def fuse_frame(grid: VoxelLabelGrid, frame: Frame, intr: CameraIntrinsics,
               prob_mode: str = "label") -> VoxelLabelGrid:
    """Fuse one frame's labels into ``grid`` in place.

    ``"label"`` mode uses the pixel's class label as a one-hot likelihood
    smoothed by ``grid.epsilon``. ``"probs"`` mode uses ``frame.class_probs``
    mixed with the same epsilon floor. Points outside the grid are counted
    in ``grid.skipped``.
    """
    if prob_mode not in PROB_MODES:
        raise ValueError(f"prob_mode must be one of {PROB_MODES}")
    pts, valid = backproject(frame, intr)
    keys, inside = grid.flat_index(pts)
    grid.skipped += int((~inside).sum())
    if keys.size == 0:
        return grid
    C = grid.n_classes
    eps = grid.epsilon
    uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    if prob_mode == "label":
        labels = frame.class_image[valid][inside]
        per_class = np.zeros((uniq.size, C))
        np.add.at(per_class, (inverse, labels), 1.0)
        # common factor log(eps / C) per observation cancels on renormalization
        gain = np.log1p((1.0 - eps) * C / eps)
        loglik = gain * per_class
    else:
        if frame.class_probs is None:
            raise ValueError("probs mode needs frame.class_probs")
        probs = frame.class_probs[valid][inside]
        per_pixel = np.log((1.0 - eps) * probs + eps / C)
        loglik = np.zeros((uniq.size, C))
        np.add.at(loglik, inverse, per_pixel)
    grid.update(uniq, loglik, counts)
    return grid


def extract_cloud(grid: VoxelLabelGrid, min_observations: int = 1) -> LabeledPointCloud:
    """Voxel centres whose most probable class is not background."""
    if len(grid) == 0:
        return LabeledPointCloud.empty()
    labels = np.argmax(grid.log_probabilities(), axis=1)
    keep = (grid.counts >= min_observations) & (labels != 0)
    keys = grid.keys[keep]
    order = np.argsort(keys, kind="stable")
    return LabeledPointCloud(grid.centers(keys[order]), labels[keep][order])
