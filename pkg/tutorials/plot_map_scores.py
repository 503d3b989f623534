"""
Scoring an object map: IoU, mAP and OMQ
=======================================

Build a tiny ground-truth map, degrade an estimate step by step and watch
how the detection score (mAP) and the object map quality (OMQ) react.
"""

import numpy as np

from semmap.geometry import Cuboid, iou3d
from semmap.quality import ObjectMap, error_breakdown_curves, map3d, omq
from semmap.vocabulary import class_id

chair, table = class_id("chair"), class_id("dining table")

##############################################################################
# Ground truth: two chairs and a table, as axis-aligned cuboids given by
# centroid and full extent.
gt = ObjectMap([
    Cuboid([1.0, 1.0, 0.45], [0.5, 0.5, 0.9], chair),
    Cuboid([2.0, 1.0, 0.45], [0.5, 0.5, 0.9], chair),
    Cuboid([1.5, 2.5, 0.40], [1.6, 0.9, 0.8], table),
])

##############################################################################
# IoU is intersection over union of the two volumes. Shifting a unit cube by
# half its width leaves a third of the union shared.
a = Cuboid([0, 0, 0], [1, 1, 1])
print("IoU of half-shifted cubes:", iou3d(a, Cuboid([0.5, 0, 0], [1, 1, 1])))


def report(name, est):
    s, q = map3d(est, gt), omq(est, gt)
    print(f"{name:<22} mAP3D {s.map3d:.3f}  mAP25 {s.map25:.3f}  OMQ {q.omq:.3f}"
          f"  (TP {q.n_tp}, FP {q.n_fp}, FN {q.n_fn})")


report("perfect", gt)

##############################################################################
# Small localisation error costs mAP at strict thresholds but OMQ only a
# little, since OMQ grades every match continuously.
rng = np.random.default_rng(0)
shaken = ObjectMap([Cuboid(c.centroid + rng.normal(0, 0.05, 3), c.extent * 1.1, c.class_id)
                    for c in gt.objects])
report("jittered", shaken)

##############################################################################
# A soft label spreads the probability mass. OMQ uses the probability of the
# correct class, mAP only the argmax.
probs = np.zeros(31)
probs[[chair, table]] = [0.6, 0.4]
soft = ObjectMap([Cuboid(gt.objects[0].centroid, gt.objects[0].extent, chair, probs)]
                 + gt.objects[1:])
report("uncertain label", soft)

##############################################################################
# A missed object and a hallucinated one.
report("missed table", ObjectMap(gt.objects[:2]))
report("extra chair", ObjectMap(gt.objects + [Cuboid([4, 4, 0.45], [0.5, 0.5, 0.9], chair)]))

##############################################################################
# The error breakdown removes one error type at a time. Each step can only
# raise AP.
est = ObjectMap(shaken.objects + [Cuboid([4, 4, 0.45], [0.5, 0.5, 0.9], chair, confidence=0.9)])
for label, curve in error_breakdown_curves(est, gt).items():
    print(f"AP[{label}] = {curve.ap:.3f}")
