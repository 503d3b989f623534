"""Cases I-IV: ground-truth vs. estimated segmentation and pose.

Case I   ground-truth poses, ground-truth labels
Case II  ground-truth poses, corrupted labels
Case III drifted poses, ground-truth labels
Case IV  drifted poses, corrupted labels

Every case of a seed reuses the same rendered frames and the same noise
draws, so differences between cases come only from the enabled channels.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from semmap.instances import ClusterParams, extract_object_map
from semmap.quality import (
    RATIO_KEYS,
    MapScores,
    OmqReport,
    PRCurve,
    error_breakdown_curves,
    map3d,
    omq,
    ratio_scores,
)
from semmap.quality.objectmap import ObjectMap
from semmap.sim import (
    CameraIntrinsics,
    PoseNoiseParams,
    Scene,
    SegNoiseParams,
    VoxelLabelGrid,
    extract_cloud,
    fuse_frame,
    generate_scene,
    generate_trajectory,
    perturb_segmentation,
    perturb_trajectory,
    render_frame,
)
from semmap.trajectory import TrajError, Trajectory, evaluate_trajectory
from semmap.vocabulary import FURNITURE_CLASSES

CASES = ("I", "II", "III", "IV")
_SEG_CASES = {"II", "IV"}
_POSE_CASES = {"III", "IV"}

# independent random streams per scene seed
_STREAM_SCENE, _STREAM_TRAJ, _STREAM_SEG, _STREAM_POSE = range(4)


@dataclass
class AblationConfig:
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    n_frames: int = 60
    n_objects: tuple[int, int] = (5, 5)
    classes: tuple[str, ...] = FURNITURE_CLASSES
    seg_noise: SegNoiseParams = field(default_factory=SegNoiseParams)
    pose_noise: PoseNoiseParams = field(default_factory=PoseNoiseParams)
    cluster: ClusterParams = field(default_factory=ClusterParams)
    intrinsics: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    voxel_size: float = 0.05
    min_observations: int = 1
    cases: tuple[str, ...] = CASES
    root_seed: int = 0

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        self.cases = tuple(self.cases)
        if not self.seeds:
            raise ValueError("at least one scene seed required")
        if self.n_frames < 2:
            raise ValueError("at least two frames required")
        unknown = set(self.cases) - set(CASES)
        if unknown:
            raise ValueError(f"unknown cases {sorted(unknown)}")
        if "I" not in self.cases:
            raise ValueError("case I is the ratio baseline and must be included")
        self.cases = tuple(c for c in CASES if c in self.cases)

    def stream(self, seed: int, stream: int, *extra: int) -> np.random.Generator:
        ss = np.random.SeedSequence([self.root_seed, seed, stream, *extra])
        return np.random.default_rng(ss)

    def stream_seed(self, seed: int, stream: int) -> int:
        return int(self.stream(seed, stream).integers(2**31))


@dataclass(eq=False)
class CaseResult:
    seed: int
    case: str
    object_map: ObjectMap
    trajectory: Trajectory
    scores: MapScores
    omq: OmqReport
    traj_error: TrajError
    curves: dict[str, PRCurve]
    ratios: dict[str, float | None] = field(default_factory=dict)


@dataclass(eq=False)
class AblationReport:
    config: AblationConfig
    results: list[CaseResult]
    mean_ratios: dict[str, dict[str, float | None]]

    def result(self, seed: int, case: str) -> CaseResult:
        for r in self.results:
            if r.seed == seed and r.case == case:
                return r
        raise KeyError((seed, case))


def build_scene(config: AblationConfig, seed: int) -> tuple[Scene, Trajectory]:
    scene = generate_scene(config.stream_seed(seed, _STREAM_SCENE), config.n_objects,
                           config.classes)
    traj = generate_trajectory(scene, config.n_frames, config.stream_seed(seed, _STREAM_TRAJ))
    return scene, traj


def _render_all(scene, traj, intr):
    return [render_frame(scene, traj.pose(i), intr) for i in range(len(traj))]


def run_case(scene: Scene, traj: Trajectory, case_id: str, config: AblationConfig,
             seed: int = 0, frames=None) -> tuple[ObjectMap, Trajectory]:
    """Render, optionally corrupt, fuse and extract one case's object map.

    Returns the map and the trajectory used for fusion. ``frames`` may hold
    frames already rendered along ``traj`` to avoid re-rendering.
    """
    if case_id not in CASES:
        raise ValueError(f"unknown case {case_id!r}")
    intr = config.intrinsics
    if frames is None:
        frames = _render_all(scene, traj, intr)
    used = traj
    if case_id in _POSE_CASES:
        used = perturb_trajectory(traj, config.pose_noise,
                                  config.stream(seed, _STREAM_POSE, config.pose_noise.seed))
    seg_rng = config.stream(seed, _STREAM_SEG, config.seg_noise.confusion_seed)
    n_classes = len(scene.vocabulary) + 1
    grid = VoxelLabelGrid.covering(scene.room_lo, scene.room_hi, config.voxel_size, n_classes)
    for i, frame in enumerate(frames):
        if case_id in _SEG_CASES:
            frame = perturb_segmentation(frame, config.seg_noise, seg_rng, n_classes)
        if used is not traj:
            frame = replace(frame, pose=used.pose(i))
        fuse_frame(grid, frame, intr)
    cloud = extract_cloud(grid, config.min_observations)
    return extract_object_map(cloud, config.cluster, vocabulary=scene.vocabulary), used


def evaluate_case(seed, case, est: ObjectMap, used: Trajectory, scene: Scene,
                  traj: Trajectory) -> CaseResult:
    gt = scene.ground_truth_map()
    dt = float(np.min(np.diff(traj.timestamps))) / 2 if len(traj) > 1 else 1.0
    return CaseResult(
        seed=seed, case=case, object_map=est, trajectory=used,
        scores=map3d(est, gt), omq=omq(est, gt),
        traj_error=evaluate_trajectory(used, traj, max_dt=dt),
        curves=error_breakdown_curves(est, gt),
    )


def run_seed(config: AblationConfig, seed: int) -> list[CaseResult]:
    scene, traj = build_scene(config, seed)
    frames = _render_all(scene, traj, config.intrinsics)
    results = []
    for case in config.cases:
        est, used = run_case(scene, traj, case, config, seed, frames)
        results.append(evaluate_case(seed, case, est, used, scene, traj))
    base = results[0]
    for r in results:
        r.ratios = ratio_scores(r.scores, r.omq, base.scores, base.omq)
    return results


def max_workers() -> int:
    env = os.environ.get("SEMMAP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_ablation(config: AblationConfig) -> AblationReport:
    workers = min(max_workers(), len(config.seeds))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            per_seed = list(pool.map(lambda s: run_seed(config, s), config.seeds))
    else:
        per_seed = [run_seed(config, s) for s in config.seeds]
    results = [r for rs in per_seed for r in rs]
    return AblationReport(config, results, mean_ratios(results, config.cases))


def mean_ratios(results, cases=CASES) -> dict[str, dict[str, float | None]]:
    """Seed-averaged ratios per case; undefined ratios are left out of the mean."""
    out = {}
    for case in cases:
        out[case] = {}
        for key in RATIO_KEYS:
            vals = [r.ratios[key] for r in results if r.case == case and r.ratios[key] is not None]
            out[case][key] = float(np.mean(vals)) if vals else None
    return out
