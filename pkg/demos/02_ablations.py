"""
Ablations
=========

Drop one ingredient at a time: the morphological profile, then the whole
ensemble (a single full-disk regression). Plain change vector analysis is
the reference point.
"""

from siroc import SirocParams, confusion, generate_scene, metrics, run_cva_baseline, run_siroc, run_vanilla_hsr
from siroc.raster_io import ImagePair
from siroc.synth import preset

for name in ("standard-01", "noise-stress-01"):
    scene = generate_scene(preset(name))
    pair = ImagePair(scene.pre, scene.post)
    runs = {
        "SiROC": run_siroc(pair).mask,
        "no morphology": run_siroc(pair, SirocParams(use_morphology=False)).mask,
        "vanilla HSR": run_vanilla_hsr(pair).mask,
        "CVA": run_cva_baseline(pair),
    }
    print(name)
    for label, mask in runs.items():
        m = metrics(confusion(mask, scene.gt))
        print(f"  {label:14s} F1 {m.f1:.3f}  specificity {m.specificity:.4f}")

# Under heavy noise most of the gain comes from the opening/closing step: each
# member's Otsu split leaves salt-and-pepper false alarms that the profile
# removes before the vote.
