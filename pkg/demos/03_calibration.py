"""
How far to trust the confidence map
===================================

Bucket pixels by vote share and look at the precision in each bucket. Low
support buckets (fewer than 50 predicted pixels) are shown but left out of
the monotonicity score.
"""

from siroc import calibration_curve, generate_scene, monotonicity_score, run_siroc, vote_threshold
from siroc.evaluation import confusion, metrics
from siroc.raster_io import ImagePair
from siroc.synth import preset

scene = generate_scene(preset("standard-01"))
out = run_siroc(ImagePair(scene.pre, scene.post))

curve = calibration_curve(out.confidence, out.mask, scene.gt, buckets=10)
for b in curve.buckets:
    prec = "   -  " if b.precision is None else f"{b.precision:.3f}"
    flag = "" if b.well_supported else "  (low support)"
    print(f"[{b.lo:.1f}, {b.hi:.1f})  n={b.count:6d}  precision {prec}{flag}")
print("monotonicity:", monotonicity_score(curve))

# raising the voting share trades sensitivity for specificity
for v in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
    m = metrics(confusion(vote_threshold(out.confidence, v), scene.gt))
    print(f"v={v:.1f}  sensitivity {m.sensitivity:.3f}  specificity {m.specificity:.4f}")
