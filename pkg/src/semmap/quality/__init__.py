"""Object map scoring: mAP over 3D IoU thresholds, error breakdowns and OMQ."""
from semmap.quality.detection import (
    BREAKDOWN_LABELS,
    RECALL_GRID,
    THRESHOLDS,
    MapScores,
    MatchResult,
    PRCurve,
    average_curves,
    curve_from_flags,
    error_breakdown_curves,
    map3d,
    match_detections,
    pr_curve,
)
from semmap.quality.objectmap import ObjectMap
from semmap.quality.omq import (
    RATIO_KEYS,
    OmqReport,
    fp_cost,
    label_quality,
    omq,
    omq_from_parts,
    optimal_assignment,
    pairwise_quality,
    ratio_scores,
)

__all__ = [
    "BREAKDOWN_LABELS", "RECALL_GRID", "THRESHOLDS", "RATIO_KEYS",
    "MapScores", "MatchResult", "ObjectMap", "OmqReport", "PRCurve",
    "average_curves", "curve_from_flags", "error_breakdown_curves", "fp_cost",
    "label_quality", "map3d", "match_detections", "omq", "omq_from_parts",
    "optimal_assignment", "pairwise_quality", "pr_curve", "ratio_scores",
]
