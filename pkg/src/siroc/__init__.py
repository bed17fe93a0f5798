"""
siroc
=====

Unsupervised change detection for co-registered bitemporal optical rasters.
Each pixel is predicted from a ring of distant neighbours by half-sibling
regression; an ensemble of mutually exclusive rings votes on change after
Otsu thresholding and a morphological profile, giving both a binary mask and
a per-pixel confidence.

* :mod:`siroc.raster_io` -- raster containers and raw/PNG/TIFF I/O
* :mod:`siroc.hsr` -- summed-area tables, growth rates, residuals
* :mod:`siroc.thresholding` -- Otsu thresholding
* :mod:`siroc.morphology` -- binary erosion, dilation, opening, closing
* :mod:`siroc.pipeline` -- the ensemble, ablations and CVA baseline
* :mod:`siroc.evaluation` -- metrics, macro averages, calibration curves
* :mod:`siroc.synth` -- deterministic synthetic scenes
* :mod:`siroc.cli` -- the ``siroc`` command
"""

from siroc.evaluation import (
    ConfusionCounts,
    MetricSet,
    calibration_curve,
    confusion,
    macro_average,
    metrics,
    monotonicity_score,
)
from siroc.hsr import AnnulusSpec, growth_map, integral_image
from siroc.pipeline import (
    SirocOutput,
    SirocParams,
    ensemble_members,
    run_cva_baseline,
    run_siroc,
    run_vanilla_hsr,
    vote_threshold,
)
from siroc.raster_io import ImagePair, Raster, load_raster, save_raster, select_bands
from siroc.synth import SceneSpec, generate_scene, scene_presets

__all__ = [
    "AnnulusSpec",
    "ConfusionCounts",
    "ImagePair",
    "MetricSet",
    "Raster",
    "SceneSpec",
    "SirocOutput",
    "SirocParams",
    "calibration_curve",
    "confusion",
    "ensemble_members",
    "generate_scene",
    "growth_map",
    "integral_image",
    "load_raster",
    "macro_average",
    "metrics",
    "monotonicity_score",
    "run_cva_baseline",
    "run_siroc",
    "run_vanilla_hsr",
    "save_raster",
    "scene_presets",
    "select_bands",
    "vote_threshold",
]
