"""Evaluation of 3D semantic object maps.

Modules:
    geometry    axis-aligned cuboids, rigid poses, 3D IoU
    instances   per-class Euclidean clustering into cuboid maps
    quality     greedy matching, PR curves, mAP, error breakdown, OMQ
    trajectory  ATE and RPE
    sim         synthetic scenes, ray-cast frames, Bayesian voxel label fusion
    ablation    Cases I-IV driver
    formats     JSON maps, PLY clouds, TUM trajectories, PGM frames, CSV curves
"""
from semmap.geometry import Cuboid, RigidPose, fit_axis_aligned_cuboid, iou3d
from semmap.quality import ObjectMap, map3d, omq

__version__ = "0.1.0"

__all__ = ["Cuboid", "ObjectMap", "RigidPose", "fit_axis_aligned_cuboid", "iou3d", "map3d", "omq"]
