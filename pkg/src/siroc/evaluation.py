"""
Confusion counts, binary change metrics, city-level macro averages and
confidence calibration curves.

Undefined ratios (0/0) are represented as ``None`` and are left out of macro
averages instead of being imputed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from siroc.errors import ShapeMismatchError

METRIC_NAMES = ("specificity", "sensitivity", "precision", "f1")
SUPPORT_FLOOR = 50


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricSet:
    specificity: float | None
    sensitivity: float | None
    precision: float | None
    f1: float | None
    # per-metric number of scenes that contributed (macro averages only)
    support: dict[str, int] = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict[str, float | None]:
        return {k: getattr(self, k) for k in METRIC_NAMES}


def _pair(mask, gt) -> tuple[np.ndarray, np.ndarray]:
    mask = np.asarray(mask).astype(bool)
    gt = np.asarray(gt).astype(bool)
    if mask.shape != gt.shape:
        raise ShapeMismatchError(f"mask {mask.shape} and ground truth {gt.shape} differ")
    return mask, gt


def confusion(mask, gt) -> ConfusionCounts:
    """2x2 counts with change (1) as the positive class."""
    mask, gt = _pair(mask, gt)
    tp = int(np.count_nonzero(mask & gt))
    fp = int(np.count_nonzero(mask & ~gt))
    fn = int(np.count_nonzero(~mask & gt))
    return ConfusionCounts(tp=tp, fp=fp, tn=mask.size - tp - fp - fn, fn=fn)


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def metrics(c: ConfusionCounts) -> MetricSet:
    specificity = _ratio(c.tn, c.tn + c.fp)
    sensitivity = _ratio(c.tp, c.tp + c.fn)
    precision = _ratio(c.tp, c.tp + c.fp)
    if precision is None or sensitivity is None or precision + sensitivity == 0:
        f1 = None
    else:
        f1 = 2 * precision * sensitivity / (precision + sensitivity)
    return MetricSet(specificity, sensitivity, precision, f1)


def macro_average(per_scene: Sequence[MetricSet]) -> MetricSet:
    """Unweighted mean of each metric over the scenes where it is defined."""
    if not per_scene:
        raise ValueError("macro average needs at least one scene")
    values, support = {}, {}
    for name in METRIC_NAMES:
        defined = [getattr(m, name) for m in per_scene if getattr(m, name) is not None]
        support[name] = len(defined)
        values[name] = sum(defined) / len(defined) if defined else None
    return MetricSet(**values, support=support)


@dataclass(frozen=True)
class CalibrationBucket:
    lo: float
    hi: float
    count: int
    predicted: int
    precision: float | None

    @property
    def well_supported(self) -> bool:
        return self.predicted >= SUPPORT_FLOOR and self.precision is not None


@dataclass(frozen=True)
class CalibrationCurve:
    buckets: tuple[CalibrationBucket, ...]

    @property
    def total(self) -> int:
        return sum(b.count for b in self.buckets)


def _bucket_edges(conf: np.ndarray, buckets: int, strategy: str) -> np.ndarray:
    if strategy == "uniform":
        # arange / n keeps edges at k/n exactly, matching vote shares k/F
        return np.arange(buckets + 1, dtype=np.float64) / buckets
    if strategy == "quantile":
        inner = np.quantile(conf, np.arange(1, buckets) / buckets)
        return np.concatenate([[0.0], inner, [1.0]])
    raise ValueError(f"unknown bucket strategy {strategy!r}")


def calibration_curve(conf, mask, gt, buckets: int = 10, strategy: str = "uniform") -> CalibrationCurve:
    """Precision of the change prediction per confidence bucket.

    Buckets are half-open ``[lo, hi)`` except the last, which includes 1.
    Within a bucket the predicted-change pixels are those set in ``mask``; a
    bucket with no predicted pixels (entirely below the voting share) is
    scored as if all of its pixels were predicted change.
    """
    if buckets < 2:
        raise ValueError(f"need at least 2 buckets, got {buckets}")
    conf = np.asarray(conf, dtype=np.float64)
    mask, gt = _pair(mask, gt)
    if conf.shape != mask.shape:
        raise ShapeMismatchError(f"confidence {conf.shape} and mask {mask.shape} differ")
    edges = _bucket_edges(conf.ravel(), buckets, strategy)
    idx = np.clip(np.searchsorted(edges, conf.ravel(), side="right") - 1, 0, buckets - 1)
    flat_mask, flat_gt = mask.ravel(), gt.ravel()
    out = []
    for b in range(buckets):
        inside = idx == b
        count = int(inside.sum())
        predicted = inside & flat_mask
        if not predicted.any():
            predicted = inside
        n_pred = int(predicted.sum())
        precision = _ratio(int((predicted & flat_gt).sum()), n_pred)
        out.append(CalibrationBucket(float(edges[b]), float(edges[b + 1]), count, n_pred, precision))
    return CalibrationCurve(tuple(out))


def monotonicity_score(curve: CalibrationCurve | Iterable[float]) -> float:
    """Fraction of adjacent well-supported bucket pairs whose precision does not drop.

    Accepts a curve or a plain sequence of precisions. Returns 1.0 when fewer
    than two buckets qualify.
    """
    if isinstance(curve, CalibrationCurve):
        precisions = [b.precision for b in curve.buckets if b.well_supported]
    else:
        precisions = [p for p in curve if p is not None]
    pairs = list(zip(precisions, precisions[1:]))
    if not pairs:
        return 1.0
    return sum(b >= a for a, b in pairs) / len(pairs)


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def write_metrics_csv(path, rows: Sequence[tuple[str, MetricSet]], macro: MetricSet | None = None) -> None:
    """One row per scene plus an optional ``MACRO`` row; the note column lists undefined metrics."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scene", *METRIC_NAMES, "note"])
        for name, m in rows:
            undefined = [k for k in METRIC_NAMES if getattr(m, k) is None]
            note = f"undefined: {' '.join(undefined)}" if undefined else ""
            writer.writerow([name, *(_fmt(getattr(m, k)) for k in METRIC_NAMES), note])
        if macro is not None:
            n = len(rows)
            partial = [f"{k} {macro.support[k]}/{n}" for k in METRIC_NAMES if macro.support.get(k, n) != n]
            note = f"scenes contributing: {', '.join(partial)}" if partial else ""
            writer.writerow(["MACRO", *(_fmt(getattr(macro, k)) for k in METRIC_NAMES), note])


def write_calibration_csv(path, curve: CalibrationCurve) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bucket_lo", "bucket_hi", "count", "precision", "low_support"])
        for b in curve.buckets:
            writer.writerow([f"{b.lo:.6f}", f"{b.hi:.6f}", b.count, _fmt(b.precision), int(not b.well_supported)])
