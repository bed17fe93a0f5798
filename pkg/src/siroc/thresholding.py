"""
Otsu thresholding of real-valued difference images.

The histogram has 256 equal-width bins spanning the observed ``[min, max]``.
Bins are closed on the right (the first bin also holds ``min``), so a pixel
lands above candidate edge ``k`` exactly when ``d > edges[k]``; the histogram
split and :func:`binarize` therefore agree pixel for pixel. Candidate
thresholds are the 256 upper bin edges. The between-class variance is
compared in exact integer arithmetic and ties go to the lowest edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_BINS = 256


@dataclass(frozen=True)
class OtsuResult:
    threshold: float
    histogram: np.ndarray
    bin_edges: tuple[float, float]

    @property
    def edges(self) -> np.ndarray:
        return histogram_edges(*self.bin_edges)


def histogram_edges(lo: float, hi: float, bins: int = N_BINS) -> np.ndarray:
    edges = lo + (hi - lo) * (np.arange(bins + 1, dtype=np.float64) / bins)
    edges[-1] = hi
    return edges


def bin_indices(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """
    Right-closed bin index of every value: ``edges[i] < v <= edges[i + 1]``.
    Values equal to ``edges[0]`` fall into bin 0.
    """
    idx = np.searchsorted(edges, values, side="left") - 1
    return np.clip(idx, 0, len(edges) - 2)


def best_split(hist: np.ndarray) -> int:
    """Smallest ``k`` in ``1..len(hist)`` maximising between-class variance.

    The lower class is bins ``< k``. With ``n0, n1`` class counts and ``D =
    N * s0 - n0 * S`` (``s0, S`` level sums), the between-class variance is
    proportional to ``D**2 / (n0 * n1)``; cross-multiplication keeps the
    comparison exact.
    """
    counts = [int(c) for c in hist]
    total = sum(counts)
    level_sum = sum(i * c for i, c in enumerate(counts))
    best_k, best_num, best_den = len(counts), 0, 1
    n0 = s0 = 0
    for k in range(1, len(counts) + 1):
        n0 += counts[k - 1]
        s0 += (k - 1) * counts[k - 1]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        num = (total * s0 - n0 * level_sum) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_k, best_num, best_den = k, num, den
    return best_k


def otsu_threshold(d) -> OtsuResult:
    """Otsu's threshold with 256 bins over the data range.

    A constant image yields ``threshold == max(d)``, so nothing exceeds it.
    """
    d = np.asarray(d, dtype=np.float64)
    if d.size == 0:
        raise ValueError("cannot threshold an empty image")
    flat = d.ravel()
    lo, hi = float(flat.min()), float(flat.max())
    if lo == hi:
        hist = np.zeros(N_BINS, dtype=np.int64)
        hist[0] = flat.size
        return OtsuResult(hi, hist, (lo, hi))
    edges = histogram_edges(lo, hi)
    hist = np.bincount(bin_indices(flat, edges), minlength=N_BINS).astype(np.int64)
    k = best_split(hist)
    return OtsuResult(float(edges[k]), hist, (lo, hi))


def binarize(d, threshold: float) -> np.ndarray:
    """Change wherever ``d > threshold`` (strict)."""
    return np.asarray(d) > threshold
