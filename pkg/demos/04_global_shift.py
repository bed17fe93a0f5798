"""
A global brightness change
==========================

When the whole post image is brighter, differencing flags most of the scene.
The neighbourhood growth rate absorbs the factor, so only the objects remain.
"""

import numpy as np

from siroc import confusion, generate_scene, metrics, run_cva_baseline, run_siroc
from siroc.pipeline import pair_from_arrays
from siroc.raster_io import ImagePair
from siroc.synth import preset

scene = generate_scene(preset("global-shift-01"))
pair = ImagePair(scene.pre, scene.post)
for label, mask in (("CVA", run_cva_baseline(pair)), ("SiROC", run_siroc(pair).mask)):
    m = metrics(confusion(mask, scene.gt))
    fp = int((mask & ~scene.gt).sum())
    print(f"{label:6s} F1 {m.f1:.3f}  false alarms {fp}")

# the limit case: post is an exact multiple of pre
pre = scene.pre.data
for k in (0.5, 2.0, 3.0):
    post = (pre.astype(np.float64) * k).astype(np.float32)
    p = pair_from_arrays(pre, post)
    print(f"post = {k} * pre:  SiROC {int(run_siroc(p).mask.sum())} px,  CVA {int(run_cva_baseline(p).sum())} px")
