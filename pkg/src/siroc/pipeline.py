"""
The SiROC ensemble: one HSR change mask per mutually exclusive annulus,
majority vote over the members, and the two ablations / CVA baseline used
for comparison.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from siroc.errors import ParameterError
from siroc.hsr import AnnulusSpec, BandTables, aggregate_channels, predict_band, residual_band
from siroc.morphology import MORPH_ORDERS, morph_profile
from siroc.raster_io import ImagePair, Raster, select_bands
from siroc.thresholding import OtsuResult, binarize, otsu_threshold

THREADS_ENV = "SIROC_THREADS"


@dataclass(frozen=True)
class SirocParams:
    """Hyperparameters. Defaults are the values tuned on the OSCD training set.

    ``residual_floor`` zeroes difference-image values at or below
    ``residual_floor * sum_c |post_c|``; such values are float32/float64
    rounding of an exactly explained pixel, not change evidence.
    """

    n_max: int = 200
    e_start: int = 0
    s: int = 8
    p: int = 5
    v: float = 0.5
    use_morphology: bool = True
    morph_order: str = "open-close"
    band_indices: tuple[int, ...] | None = None
    loop_strict: bool = False
    residual_floor: float = 1e-6

    def __post_init__(self):
        if self.band_indices is not None:
            object.__setattr__(self, "band_indices", tuple(int(i) for i in self.band_indices))
        if self.s < 1:
            raise ParameterError(f"step s must be >= 1, got {self.s}")
        if self.e_start < 0:
            raise ParameterError(f"e_start must be >= 0, got {self.e_start}")
        if self.e_start + self.s > self.n_max:
            raise ParameterError(
                f"e_start + s = {self.e_start + self.s} exceeds n_max = {self.n_max}"
            )
        if not 0 <= self.v <= 1:
            raise ParameterError(f"voting share v must lie in [0, 1], got {self.v}")
        if self.p < 1:
            raise ParameterError(f"morphology size p must be >= 1, got {self.p}")
        if self.morph_order not in MORPH_ORDERS:
            raise ParameterError(f"morph_order must be one of {MORPH_ORDERS}")
        if self.residual_floor < 0:
            raise ParameterError("residual_floor must be >= 0")

    @property
    def n_start(self) -> int:
        return self.e_start + self.s

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band_indices"] = None if self.band_indices is None else list(self.band_indices)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SirocParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown parameter(s): {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class SirocOutput:
    confidence: np.ndarray
    mask: np.ndarray
    members: tuple[AnnulusSpec, ...]
    thresholds: tuple[OtsuResult, ...]
    votes: np.ndarray = field(repr=False)

    @property
    def member_count(self) -> int:
        return len(self.members)


def expected_member_count(params: SirocParams) -> int:
    return (params.n_max - params.n_start) // params.s + 1


def ensemble_members(params: SirocParams) -> list[AnnulusSpec]:
    """Consecutive rings ``(e_start + k*s, e_start + (k+1)*s)`` up to ``n_max``.

    The outer bound is inclusive unless ``params.loop_strict`` is set.
    """
    members = []
    e, n = params.e_start, params.n_start
    while n < params.n_max or (n == params.n_max and not params.loop_strict):
        members.append(AnnulusSpec(e, n))
        e += params.s
        n += params.s
    if not members:
        raise ParameterError("parameters yield an empty ensemble")
    return members


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(raw)
        except ValueError:
            raise ParameterError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, threads)


def _prepare(pair: ImagePair, params: SirocParams) -> ImagePair:
    if params.band_indices is None:
        return pair
    return ImagePair(select_bands(pair.pre, params.band_indices), select_bands(pair.post, params.band_indices))


def _band_tables(pair: ImagePair) -> list[BandTables]:
    return [BandTables.build(pair.pre.band(c), pair.post.band(c)) for c in range(pair.pre.bands)]


def _post_scale(pair: ImagePair) -> np.ndarray:
    return np.abs(pair.post.data.astype(np.float64)).sum(axis=0)


def _difference(pair: ImagePair, tables: Sequence[BandTables], a: AnnulusSpec) -> np.ndarray:
    residuals = []
    for c, t in enumerate(tables):
        pred = predict_band(pair.pre.band(c), t.growth(a))
        residuals.append(residual_band(pair.post.band(c), pred))
    return aggregate_channels(residuals)


def _member(pair, tables, scale, a, params) -> tuple[np.ndarray, OtsuResult]:
    d = _difference(pair, tables, a)
    if params.residual_floor > 0:
        d[d <= params.residual_floor * scale] = 0.0
    otsu = otsu_threshold(d)
    mask = binarize(d, otsu.threshold)
    if params.use_morphology:
        mask = morph_profile(mask, params.p, params.morph_order)
    return mask, otsu


def member_difference(pair: ImagePair, a: AnnulusSpec) -> np.ndarray:
    """Channel-aggregated absolute HSR residual for one annulus."""
    return _difference(pair, _band_tables(pair), a)


def run_member(pair: ImagePair, a: AnnulusSpec, params: SirocParams | None = None) -> np.ndarray:
    params = params or SirocParams()
    pair = _prepare(pair, params)
    mask, _ = _member(pair, _band_tables(pair), _post_scale(pair), a, params)
    return mask


def vote_threshold(confidence, v: float) -> np.ndarray:
    """Change where the vote share reaches ``v``; ``v == 0`` means any vote."""
    if not 0 <= v <= 1:
        raise ParameterError(f"voting share v must lie in [0, 1], got {v}")
    confidence = np.asarray(confidence)
    if v == 0:
        return confidence > 0
    return confidence >= v


def run_siroc(pair: ImagePair, params: SirocParams | None = None, threads: int | None = None) -> SirocOutput:
    """Run every ensemble member and combine their masks by voting.

    Members are independent and may run on ``threads`` workers; votes are
    merged in member order so results do not depend on the thread count.
    """
    params = params or SirocParams()
    pair = _prepare(pair, params)
    members = ensemble_members(params)
    tables = _band_tables(pair)
    scale = _post_scale(pair)

    def job(a):
        return _member(pair, tables, scale, a, params)

    workers = min(resolve_threads(threads), len(members))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, members))
    else:
        results = [job(a) for a in members]

    votes = np.zeros(pair.pre.shape[1:], dtype=np.int64)
    for mask, _ in results:
        votes += mask
    confidence = votes / len(members)
    return SirocOutput(
        confidence=confidence,
        mask=vote_threshold(confidence, params.v),
        members=tuple(members),
        thresholds=tuple(otsu for _, otsu in results),
        votes=votes,
    )


def vanilla_params(params: SirocParams | None = None) -> SirocParams:
    """Single full-disk member ``(0, n_max)`` without morphology."""
    params = params or SirocParams()
    return replace(params, e_start=0, s=params.n_max, use_morphology=False, loop_strict=False)


def run_vanilla_hsr(pair: ImagePair, params: SirocParams | None = None, threads: int | None = None) -> SirocOutput:
    return run_siroc(pair, vanilla_params(params), threads)


def cva_difference(pair: ImagePair) -> np.ndarray:
    pre = pair.pre.data.astype(np.float64)
    post = pair.post.data.astype(np.float64)
    return np.abs(post - pre).sum(axis=0)


def run_cva_baseline(
    pair: ImagePair,
    use_morphology: bool = False,
    p: int = 5,
    morph_order: str = "open-close",
    band_indices: Sequence[int] | None = None,
) -> np.ndarray:
    """Plain change vector analysis: Otsu on summed absolute band differences."""
    if band_indices is not None:
        pair = ImagePair(select_bands(pair.pre, band_indices), select_bands(pair.post, band_indices))
    d = cva_difference(pair)
    mask = binarize(d, otsu_threshold(d).threshold)
    if use_morphology:
        mask = morph_profile(mask, p, morph_order)
    return mask


def pair_from_arrays(pre, post) -> ImagePair:
    return ImagePair(Raster(pre), Raster(post))
