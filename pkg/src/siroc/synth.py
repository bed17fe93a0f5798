"""
Deterministic synthetic bitemporal scenes with known change masks.

Every random quantity comes from a pinned generator so scenes can be
reproduced bit for bit in other languages:

* ``SplitMix64`` (Steele, Lea, Flood) seeds ``Xoshiro256**`` (Blackman,
  Vigna). Uniform doubles are ``(next() >> 11) * 2**-53``; integers in
  ``[lo, hi]`` are ``lo + floor(u * (hi - lo + 1))``; normals are
  ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`` from two consecutive uniforms.
* The scene seed feeds a root ``SplitMix64``; its first five outputs seed
  independent streams for, in order: base texture, illumination, objects,
  pre-image noise and post-image noise.
* Value noise with length scale ``L`` draws a lattice of
  ``(H - 1) // L + 2`` by ``(W - 1) // L + 2`` uniforms in ``[lo, hi]``
  (row-major) and interpolates bilinearly with smoothstep weights
  ``t * t * (3 - 2 t)`` at ``t = (coord / L) mod 1``.
* Objects are placed one at a time. Each attempt draws shape (``u < 0.5``
  is a rectangle, else an ellipse), height, width, top row, left column;
  an attempt whose bounding box overlaps an earlier object is redrawn. A
  placed object then draws its contrast factor.

The pre image is ``texture + noise`` and the post image is ``pre *
illumination * contrast + noise``; both are rounded to float32, the post
image from the rounded pre image.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from siroc.errors import PlacementError
from siroc.raster_io import Raster

MASK64 = (1 << 64) - 1
ILLUMINATIONS = ("none", "global", "local")
MAX_PLACEMENT_TRIES = 1000

TEXTURE, ILLUMINATION, OBJECTS, PRE_NOISE, POST_NOISE = range(5)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** 1.0."""

    def __init__(self, state: tuple[int, int, int, int]):
        if not any(state):
            raise ValueError("xoshiro state must not be all zero")
        self.s = [x & MASK64 for x in state]

    @classmethod
    def from_seed(cls, seed: int) -> "Xoshiro256":
        sm = SplitMix64(seed)
        return cls(tuple(sm.next() for _ in range(4)))

    def next(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def raw(self, n: int) -> np.ndarray:
        nxt = self.next
        return np.array([nxt() for _ in range(n)], dtype=np.uint64)

    def uniform(self) -> float:
        return (self.next() >> 11) * 2.0**-53

    def uniforms(self, n: int) -> np.ndarray:
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def integer(self, lo: int, hi: int) -> int:
        return lo + math.floor(self.uniform() * (hi - lo + 1))

    def normals(self, n: int) -> np.ndarray:
        u = self.uniforms(2 * n)
        u1, u2 = u[0::2], u[1::2]
        return np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(2.0 * np.pi * u2)


def stream_seeds(seed: int, count: int = 5) -> list[int]:
    root = SplitMix64(seed)
    return [root.next() for _ in range(count)]


def _stream(seed: int, which: int) -> Xoshiro256:
    return Xoshiro256.from_seed(stream_seeds(seed)[which])


def value_noise(rng: Xoshiro256, height: int, width: int, scale: float, lo: float, hi: float) -> np.ndarray:
    gh = (height - 1) // int(scale) + 2
    gw = (width - 1) // int(scale) + 2
    lattice = lo + (hi - lo) * rng.uniforms(gh * gw).reshape(gh, gw)
    fy = np.arange(height) / scale
    fx = np.arange(width) / scale
    iy = np.floor(fy).astype(int)
    ix = np.floor(fx).astype(int)
    ty = fy - iy
    tx = fx - ix
    ty = (ty * ty * (3 - 2 * ty))[:, None]
    tx = (tx * tx * (3 - 2 * tx))[None, :]
    v00 = lattice[np.ix_(iy, ix)]
    v01 = lattice[np.ix_(iy, ix + 1)]
    v10 = lattice[np.ix_(iy + 1, ix)]
    v11 = lattice[np.ix_(iy + 1, ix + 1)]
    top = v00 + (v01 - v00) * tx
    bottom = v10 + (v11 - v10) * tx
    return top + (bottom - top) * ty


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 1
    width: int = 256
    height: int = 256
    bands: int = 3
    n_objects: int = 5
    object_size: tuple[int, int] = (8, 24)
    contrast: tuple[float, float] = (1.5, 2.5)
    illumination: str = "local"
    illumination_k: float = 1.0
    illumination_range: tuple[float, float] = (0.8, 1.2)
    illumination_scale: float = 64.0
    noise_sigma: float = 0.01
    texture_scale: float = 16.0
    texture_range: tuple[float, float] = (0.2, 1.0)

    def __post_init__(self):
        for name in ("object_size", "contrast", "illumination_range", "texture_range"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.width < 64 or self.height < 64:
            raise ValueError(f"scene must be at least 64x64, got {self.width}x{self.height}")
        if self.bands < 1 or self.n_objects < 0:
            raise ValueError("bands must be >= 1 and n_objects >= 0")
        lo, hi = self.object_size
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid object size range {self.object_size}")
        clo, chi = self.contrast
        if not clo <= chi or clo <= 0 or (clo <= 1 <= chi):
            raise ValueError(f"contrast range {self.contrast} must be positive and exclude 1")
        if self.illumination not in ILLUMINATIONS:
            raise ValueError(f"illumination must be one of {ILLUMINATIONS}")
        if self.illumination_k <= 0 or min(self.illumination_range) <= 0:
            raise ValueError("illumination factors must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")
        if self.texture_scale < 1 or self.illumination_scale < 1:
            raise ValueError("length scales must be >= 1 pixel")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown scene field(s): {sorted(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class Scene(NamedTuple):
    pre: Raster
    post: Raster
    gt: np.ndarray


def illumination_field(spec: SceneSpec) -> np.ndarray:
    """Multiplicative acquisition-condition field shared by all bands."""
    shape = (spec.height, spec.width)
    if spec.illumination == "none":
        return np.ones(shape)
    if spec.illumination == "global":
        return np.full(shape, float(spec.illumination_k))
    lo, hi = spec.illumination_range
    return value_noise(_stream(spec.seed, ILLUMINATION), *shape, spec.illumination_scale, lo, hi)


def place_objects(spec: SceneSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return the change mask and the per-pixel contrast factor (1 outside objects)."""
    rng = _stream(spec.seed, OBJECTS)
    gt = np.zeros((spec.height, spec.width), dtype=bool)
    contrast = np.ones((spec.height, spec.width))
    boxes: list[tuple[int, int, int, int]] = []
    smin, smax = spec.object_size
    for k in range(spec.n_objects):
        for _ in range(MAX_PLACEMENT_TRIES):
            is_rect = rng.uniform() < 0.5
            h = rng.integer(smin, smax)
            w = rng.integer(smin, smax)
            if h > spec.height or w > spec.width:
                continue
            y0 = rng.integer(0, spec.height - h)
            x0 = rng.integer(0, spec.width - w)
            if all(y0 + h <= by or by + bh <= y0 or x0 + w <= bx or bx + bw <= x0 for by, bx, bh, bw in boxes):
                break
        else:
            raise PlacementError(f"could not place object {k + 1} of {spec.n_objects} without overlap")
        boxes.append((y0, x0, h, w))
        clo, chi = spec.contrast
        factor = clo + (chi - clo) * rng.uniform()
        if is_rect:
            region = np.zeros_like(gt)
            region[y0 : y0 + h, x0 : x0 + w] = True
        else:
            yy, xx = np.mgrid[0 : spec.height, 0 : spec.width]
            cy, cx = y0 + (h - 1) / 2, x0 + (w - 1) / 2
            region = ((yy - cy) / (h / 2)) ** 2 + ((xx - cx) / (w / 2)) ** 2 <= 1
        gt |= region
        contrast[region] = factor
    return gt, contrast


def generate_scene(spec: SceneSpec) -> Scene:
    shape = (spec.bands, spec.height, spec.width)
    tex = _stream(spec.seed, TEXTURE)
    lo, hi = spec.texture_range
    texture = np.stack(
        [value_noise(tex, spec.height, spec.width, spec.texture_scale, lo, hi) for _ in range(spec.bands)]
    )
    n = int(np.prod(shape))
    if spec.noise_sigma > 0:
        pre_noise = spec.noise_sigma * _stream(spec.seed, PRE_NOISE).normals(n).reshape(shape)
        post_noise = spec.noise_sigma * _stream(spec.seed, POST_NOISE).normals(n).reshape(shape)
    else:
        pre_noise = post_noise = 0.0
    pre = (texture + pre_noise).astype(np.float32)
    gt, contrast = place_objects(spec)
    gain = illumination_field(spec) * contrast
    post = (pre.astype(np.float64) * gain + post_noise).astype(np.float32)
    return Scene(Raster(pre), Raster(post), gt)


_PRESETS = {
    "standard-01": SceneSpec(seed=1, noise_sigma=0.25),
    "global-shift-01": SceneSpec(seed=2, illumination="global", illumination_k=1.3, contrast=(0.4, 0.7)),
    "no-change-01": SceneSpec(seed=3, n_objects=0),
    "noise-stress-01": SceneSpec(seed=4, noise_sigma=0.4),
}


def scene_presets() -> dict[str, SceneSpec]:
    return dict(_PRESETS)


def preset(name: str) -> SceneSpec:
    try:
        return _PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown scene preset {name!r}; known: {sorted(_PRESETS)}") from None


def checksums(scene: Scene) -> dict[str, str]:
    """SHA-256 of the float32 little-endian rasters and the uint8 ground truth."""
    return {
        "pre": hashlib.sha256(scene.pre.data.astype("<f4").tobytes()).hexdigest(),
        "post": hashlib.sha256(scene.post.data.astype("<f4").tobytes()).hexdigest(),
        "gt": hashlib.sha256(scene.gt.astype(np.uint8).tobytes()).hexdigest(),
    }

