"""
Half-sibling-regression image differencing over Chebyshev annuli.

A pixel at time t+1 is predicted from its neighbours as ``g * pre`` where

    g = sum(pre * post) / sum(pre ** 2)

is the least-squares growth rate of the annulus ``e < max(|dx|, |dy|) <= n``
around it. Annulus sums are read from summed-area tables, so every pixel costs
O(1) regardless of ``n``. Windows that cross the image border are clipped, and
the same clipped set feeds numerator and denominator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from siroc.errors import ShapeMismatchError


@dataclass(frozen=True)
class AnnulusSpec:
    """Square ring of pixels with Chebyshev distance ``e < d <= n``."""

    e: int
    n: int

    def __post_init__(self):
        if not (0 <= self.e < self.n):
            raise ValueError(f"annulus requires 0 <= e < n, got e={self.e}, n={self.n}")

    def contains(self, dx: int, dy: int) -> bool:
        return self.e < max(abs(dx), abs(dy)) <= self.n


def _as_plane(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-D plane, got shape {a.shape}")
    return a


def _check_same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"plane shapes differ: {a.shape} vs {b.shape}")


def integral_image(plane) -> np.ndarray:
    """Summed-area table with a leading zero row and column.

    ``S[y, x]`` is the sum of ``plane[:y, :x]``. Float input accumulates in
    float64, integer input in int64 (exact).
    """
    plane = _as_plane(plane, "plane")
    dtype = np.int64 if plane.dtype.kind in "biu" else np.float64
    if dtype is np.float64 and not np.all(np.isfinite(plane)):
        raise ValueError("plane contains non-finite values")
    h, w = plane.shape
    table = np.zeros((h + 1, w + 1), dtype=dtype)
    table[1:, 1:] = np.cumsum(np.cumsum(plane, axis=1, dtype=dtype), axis=0)
    return table


def box_sum(table: np.ndarray, y0: int, y1: int, x0: int, x1: int):
    """Sum over rows ``[y0, y1)`` and columns ``[x0, x1)``; bounds are clipped."""
    h, w = table.shape[0] - 1, table.shape[1] - 1
    y0, y1 = max(0, y0), min(h, y1)
    x0, x1 = max(0, x0), min(w, x1)
    if y0 >= y1 or x0 >= x1:
        return table.dtype.type(0)
    return table[y1, x1] - table[y0, x1] - table[y1, x0] + table[y0, x0]


def window_sums(
    table: np.ndarray, up: int, down: int | None = None, left: int | None = None, right: int | None = None
) -> np.ndarray:
    """Per-pixel sums over the clipped window ``[y-up, y+down] x [x-left, x+right]``.

    With only ``up`` given the window is the square of half-width ``up``.
    """
    down = up if down is None else down
    left = up if left is None else left
    right = left if right is None else right
    h, w = table.shape[0] - 1, table.shape[1] - 1
    rows = np.arange(h)
    cols = np.arange(w)
    y0 = np.clip(rows - up, 0, h)
    y1 = np.clip(rows + down + 1, 0, h)
    x0 = np.clip(cols - left, 0, w)
    x1 = np.clip(cols + right + 1, 0, w)
    return (
        table[np.ix_(y1, x1)]
        - table[np.ix_(y0, x1)]
        - table[np.ix_(y1, x0)]
        + table[np.ix_(y0, x0)]
    )


def annulus_sum(table: np.ndarray, x: int, y: int, a: AnnulusSpec):
    """Sum of the tabulated plane over the clipped annulus ``a`` centred on (x, y)."""
    h, w = table.shape[0] - 1, table.shape[1] - 1
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"pixel ({x}, {y}) outside {w}x{h} image")
    outer = box_sum(table, y - a.n, y + a.n + 1, x - a.n, x + a.n + 1)
    inner = box_sum(table, y - a.e, y + a.e + 1, x - a.e, x + a.e + 1)
    return outer - inner


def annulus_sums(table: np.ndarray, a: AnnulusSpec) -> np.ndarray:
    """Vectorised :func:`annulus_sum` for every pixel of the plane."""
    return window_sums(table, a.n) - window_sums(table, a.e)


@dataclass(frozen=True)
class BandTables:
    """Summed-area tables of one band pair, reusable across annuli."""

    cross: np.ndarray  # pre * post
    energy: np.ndarray  # pre ** 2
    support: np.ndarray  # number of nonzero pre pixels

    @classmethod
    def build(cls, pre_band, post_band) -> "BandTables":
        pre = _as_plane(pre_band, "pre_band").astype(np.float64)
        post = _as_plane(post_band, "post_band").astype(np.float64)
        _check_same(pre, post)
        return cls(
            cross=integral_image(pre * post),
            energy=integral_image(pre * pre),
            support=integral_image((pre != 0).astype(np.int64)),
        )

    def growth(self, a: AnnulusSpec) -> np.ndarray:
        num = annulus_sums(self.cross, a)
        den = annulus_sums(self.energy, a)
        # exact integer count decides degeneracy; float sums may leave residue
        degenerate = annulus_sums(self.support, a) == 0
        g = np.ones_like(num)
        ok = ~degenerate
        g[ok] = num[ok] / den[ok]
        return g


def growth_map(pre_band, post_band, a: AnnulusSpec) -> np.ndarray:
    """Neighbourhood growth rate ``g``; 1 where the annulus of ``pre`` is all zero."""
    return BandTables.build(pre_band, post_band).growth(a)


def predict_band(pre_band, g) -> np.ndarray:
    pre = _as_plane(pre_band, "pre_band")
    g = _as_plane(g, "g")
    _check_same(pre, g)
    return g * pre.astype(np.float64)


def residual_band(post_band, pred) -> np.ndarray:
    """Signed residual ``pred - post``."""
    post = _as_plane(post_band, "post_band")
    pred = _as_plane(pred, "pred")
    _check_same(post, pred)
    return pred - post.astype(np.float64)


def aggregate_channels(residuals: Sequence[np.ndarray]) -> np.ndarray:
    """Sum of absolute residuals over channels."""
    residuals = [_as_plane(r, "residual") for r in residuals]
    if not residuals:
        raise ValueError("need at least one residual plane")
    out = np.zeros(residuals[0].shape, dtype=np.float64)
    for r in residuals:
        _check_same(out, r)
        out += np.abs(r)
    return out


def beta_coefficients(pre_band, x: int, y: int, a: AnnulusSpec) -> dict[tuple[int, int], float]:
    """Explicit least-squares weights for every neighbour of (x, y).

    Keys are ``(x', y')`` neighbour coordinates. Meant for verification; the
    detection path uses the equivalent growth-rate form.
    """
    pre = _as_plane(pre_band, "pre_band").astype(np.float64)
    h, w = pre.shape
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"pixel ({x}, {y}) outside {w}x{h} image")
    ys = range(max(0, y - a.n), min(h, y + a.n + 1))
    xs = range(max(0, x - a.n), min(w, x + a.n + 1))
    members = [(i, j) for j in ys for i in xs if a.contains(i - x, j - y)]
    if not members:
        raise ValueError(f"annulus {a} around ({x}, {y}) is empty after clipping")
    energy = sum(pre[j, i] ** 2 for i, j in members)
    if energy == 0:
        raise ValueError(f"annulus {a} around ({x}, {y}) is all zero")
    centre = pre[y, x]
    return {(i, j): pre[j, i] * centre / energy for i, j in members}
