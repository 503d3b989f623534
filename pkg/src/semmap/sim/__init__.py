"""Desk-scale stand-in for a semantic SLAM pipeline.

Synthetic box scenes are ray-cast into depth and label images, optionally
corrupted, and fused into a voxel grid of class distributions from which a
labelled point cloud is extracted.
"""
from semmap.sim.fusion import VoxelLabelGrid, extract_cloud, fuse_frame
from semmap.sim.noise import (
    PoseNoiseParams,
    SegNoiseParams,
    confusion_map,
    perturb_segmentation,
    perturb_trajectory,
)
from semmap.sim.render import CameraIntrinsics, Frame, backproject, ray_box_interval, render_frame
from semmap.sim.scene import Scene, SceneObject, generate_scene, generate_trajectory, look_at

__all__ = [
    "CameraIntrinsics", "Frame", "PoseNoiseParams", "Scene", "SceneObject",
    "SegNoiseParams", "VoxelLabelGrid", "backproject", "confusion_map",
    "extract_cloud", "fuse_frame", "generate_scene", "generate_trajectory",
    "look_at", "perturb_segmentation", "perturb_trajectory", "ray_box_interval",
    "render_frame",
]
