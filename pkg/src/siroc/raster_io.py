"""
Raster containers and file I/O.

The canonical interchange format is a raw little-endian float32 payload in
band-sequential row-major order (``<name>.raw``) next to a JSON sidecar
(``<name>.json``)::

    {"width": 256, "height": 256, "bands": 3,
     "dtype": "float32", "order": "band-sequential-row-major"}

An optional ``"nodata"`` entry declares a sentinel. PNG and TIFF are adapters:
8-bit PNG carries binary masks as 0/255, 16-bit PNG carries confidence maps on
a linear 0..65535 scale, and multi-band float TIFF carries general rasters.

Binary masks are plain ``bool`` arrays of shape ``(height, width)`` and
confidence maps are ``float64`` arrays of the same shape with values in [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import tifffile
from PIL import Image

from siroc.errors import RasterFormatError, ShapeMismatchError

PathLike = Union[str, Path]

RAW_DTYPE = "float32"
RAW_ORDER = "band-sequential-row-major"
PNG16_SCALE = 65535

FORMATS = ("raw", "png", "tiff")


@dataclass(frozen=True)
class Raster:
    """An immutable ``bands x height x width`` grid of real values.

    Integer input is widened to float64 without rescaling. A 2-D array is
    treated as a single band.
    """

    data: np.ndarray
    nodata: float | None = None

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3:
            raise RasterFormatError(f"raster data must be 2-D or 3-D, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise RasterFormatError(f"raster dimensions must be >= 1, got {arr.shape}")
        if arr.dtype.kind in "biu":
            arr = arr.astype(np.float64)
        elif arr.dtype.kind != "f":
            raise RasterFormatError(f"unsupported raster dtype {arr.dtype}")
        arr = np.array(arr, copy=True, order="C")
        valid = ~self.nodata_mask(arr)
        if not np.all(np.isfinite(arr[valid])):
            raise RasterFormatError("raster contains non-finite values outside nodata")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    def nodata_mask(self, arr: np.ndarray | None = None) -> np.ndarray:
        arr = self.data if arr is None else arr
        if self.nodata is None:
            return np.zeros(arr.shape, dtype=bool)
        if math.isnan(self.nodata):
            return np.isnan(arr)
        return arr == self.nodata

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def band(self, index: int) -> np.ndarray:
        return self.data[index]


@dataclass(frozen=True)
class ImagePair:
    """Co-registered acquisitions at time t (``pre``) and t+1 (``post``)."""

    pre: Raster
    post: Raster

    def __post_init__(self):
        if self.pre.shape != self.post.shape:
            raise ShapeMismatchError(
                f"pre {self.pre.shape} and post {self.post.shape} differ; "
                "inputs must be co-registered with equal band counts"
            )

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.pre.shape


def select_bands(r: Raster, indices: Sequence[int]) -> Raster:
    """Return a new raster holding ``indices`` of ``r`` in the given order."""
    indices = [int(i) for i in indices]
    if not indices:
        raise ValueError("band index list must be non-empty")
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate band index in {indices}")
    for i in indices:
        if not 0 <= i < r.bands:
            raise IndexError(f"band index {i} out of range for {r.bands}-band raster")
    return Raster(r.data[indices], nodata=r.nodata)


def infer_format(path: PathLike) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".raw", ".json"):
        return "raw"
    if suffix == ".png":
        return "png"
    if suffix in (".tif", ".tiff"):
        return "tiff"
    raise RasterFormatError(f"cannot infer raster format from suffix {suffix!r}")


def _resolve(path: PathLike, format: str | None) -> tuple[Path, str]:
    path = Path(path)
    fmt = format or infer_format(path)
    if fmt not in FORMATS:
        raise RasterFormatError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    return path, fmt


def raw_paths(path: PathLike) -> tuple[Path, Path]:
    """Return ``(payload, sidecar)`` paths for a raw raster stem or either file."""
    path = Path(path)
    if path.suffix.lower() in (".raw", ".json"):
        path = path.with_suffix("")
    return path.with_name(path.name + ".raw"), path.with_name(path.name + ".json")


# -- loading -----------------------------------------------------------------


def _read_raw(path: Path) -> tuple[np.ndarray, float | None]:
    payload, sidecar = raw_paths(path)
    try:
        header = json.loads(sidecar.read_text())
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError) as exc:
        raise RasterFormatError(f"unreadable sidecar {sidecar}: {exc}") from exc
    try:
        width, height, bands = (int(header[k]) for k in ("width", "height", "bands"))
    except (KeyError, TypeError, ValueError) as exc:
        raise RasterFormatError(f"sidecar {sidecar} lacks integer width/height/bands") from exc
    if header.get("dtype", RAW_DTYPE) != RAW_DTYPE:
        raise RasterFormatError(f"unsupported raw dtype {header.get('dtype')!r}")
    if header.get("order", RAW_ORDER) != RAW_ORDER:
        raise RasterFormatError(f"unsupported raw order {header.get('order')!r}")
    if min(width, height, bands) < 1:
        raise RasterFormatError(f"sidecar {sidecar} declares empty raster")
    values = np.fromfile(payload, dtype="<f4")
    expected = width * height * bands
    if values.size != expected:
        raise RasterFormatError(
            f"{payload} holds {values.size} values, sidecar declares {expected}"
        )
    nodata = header.get("nodata")
    return values.astype(np.float32).reshape(bands, height, width), (
        None if nodata is None else float(nodata)
    )


def _read_png(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode == "P":
                im = im.convert("RGB")
            arr = np.array(im)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise RasterFormatError(f"unreadable PNG {path}: {exc}") from exc
    if arr.ndim == 3:
        arr = np.moveaxis(arr, -1, 0)
    return arr


def _read_tiff(path: Path) -> np.ndarray:
    try:
        with tifffile.TiffFile(path) as tif:
            series = tif.series[0]
            arr = series.asarray()
            axes = series.axes
    except FileNotFoundError:
        raise
    except Exception as exc:  # tifffile raises a variety of types on bad input
        raise RasterFormatError(f"unreadable TIFF {path}: {exc}") from exc
    if arr.ndim == 3 and axes.endswith("S"):
        arr = np.moveaxis(arr, -1, 0)
    if arr.ndim not in (2, 3):
        raise RasterFormatError(f"TIFF {path} has unsupported shape {arr.shape}")
    return arr


def load_raster(path: PathLike, format: str | None = None) -> Raster:
    """Load a raster, rejecting non-finite values and declared nodata pixels."""
    path, fmt = _resolve(path, format)
    nodata = None
    if fmt == "raw":
        arr, nodata = _read_raw(path)
    elif fmt == "png":
        arr = _read_png(path)
    else:
        arr = _read_tiff(path)
    if arr.dtype.kind in "biu":
        arr = arr.astype(np.float64)
    if nodata is not None:
        hits = np.isnan(arr) if math.isnan(nodata) else arr == nodata
        if np.any(hits):
            raise RasterFormatError(
                f"{path} contains {int(hits.sum())} nodata pixels; masking is not supported"
            )
    if not np.all(np.isfinite(arr)):
        raise RasterFormatError(f"{path} contains non-finite values")
    return Raster(arr, nodata=nodata)


def load_mask(path: PathLike, format: str | None = None) -> np.ndarray:
    """Load a binary mask: any nonzero pixel is change."""
    r = load_raster(path, format)
    if r.bands != 1:
        raise RasterFormatError(f"mask {path} must have one band, found {r.bands}")
    return r.data[0] != 0


def load_confidence(path: PathLike, format: str | None = None) -> np.ndarray:
    """Load a confidence map from raw float32 or 16-bit PNG."""
    path, fmt = _resolve(path, format)
    if fmt == "png":
        arr = _read_png(path)
        if arr.ndim != 2 or arr.dtype.itemsize < 2:
            raise RasterFormatError(f"confidence PNG {path} must be single-band 16-bit")
        return arr.astype(np.float64) / PNG16_SCALE
    r = load_raster(path, fmt)
    if r.bands != 1:
        raise RasterFormatError(f"confidence map {path} must have one band")
    conf = r.data[0].astype(np.float64)
    if conf.min() < 0 or conf.max() > 1:
        raise RasterFormatError(f"confidence map {path} has values outside [0, 1]")
    return conf


# -- saving ------------------------------------------------------------------


def _write_raw(arr: np.ndarray, path: Path, nodata: float | None = None) -> None:
    arr = np.asarray(arr)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    finite = arr[np.isfinite(arr)]
    if finite.size and np.abs(finite).max() > np.finfo(np.float32).max:
        raise RasterFormatError("values overflow float32")
    payload, sidecar = raw_paths(path)
    payload.parent.mkdir(parents=True, exist_ok=True)
    arr.astype("<f4").tofile(payload)
    header = {
        "width": int(arr.shape[2]),
        "height": int(arr.shape[1]),
        "bands": int(arr.shape[0]),
        "dtype": RAW_DTYPE,
        "order": RAW_ORDER,
    }
    if nodata is not None:
        header["nodata"] = nodata
    sidecar.write_text(json.dumps(header))


def _write_png(arr: np.ndarray, path: Path) -> None:
    """Write integer-valued bands as 8-bit (1/3/4 bands) or 16-bit (1 band) PNG."""
    if arr.ndim == 3 and arr.shape[0] == 1:
        arr = arr[0]
    if np.any(arr != np.round(arr)) or arr.min() < 0:
        raise RasterFormatError("PNG requires non-negative integer values")
    peak = arr.max()
    if arr.ndim == 2 and peak <= 255:
        im = Image.fromarray(arr.astype(np.uint8), mode="L")
    elif arr.ndim == 2 and peak <= PNG16_SCALE:
        im = Image.fromarray(arr.astype(np.uint16))
    elif arr.ndim == 3 and arr.shape[0] in (3, 4) and peak <= 255:
        im = Image.fromarray(np.ascontiguousarray(np.moveaxis(arr, 0, -1)).astype(np.uint8))
    else:
        raise RasterFormatError(
            f"values up to {peak} with shape {arr.shape} do not fit a PNG layout"
        )
    path.parent.mkdir(parents=True, exist_ok=True)
    im.save(path)


def _write_tiff(arr: np.ndarray, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tifffile.imwrite(
        path,
        np.asarray(arr, dtype=np.float32),
        photometric="minisblack",
        planarconfig="separate" if arr.ndim == 3 else None,
    )


def confidence_to_png16(conf: np.ndarray) -> np.ndarray:
    """Scale [0, 1] confidence to 0..65535 with round-half-up."""
    conf = np.asarray(conf, dtype=np.float64)
    if conf.size and (conf.min() < 0 or conf.max() > 1):
        raise RasterFormatError("confidence values must lie in [0, 1]")
    return np.floor(conf * PNG16_SCALE + 0.5).astype(np.uint16)


def save_mask(mask: np.ndarray, path: PathLike, format: str | None = None) -> None:
    path, fmt = _resolve(path, format)
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise RasterFormatError(f"mask must be 2-D, got shape {mask.shape}")
    if mask.dtype != bool and not np.isin(mask, (0, 1)).all():
        raise RasterFormatError("mask values must be 0 or 1")
    mask = mask.astype(bool)
    if fmt == "png":
        _write_png(mask.astype(np.uint8) * 255, path)
    elif fmt == "raw":
        _write_raw(mask.astype(np.float32), path)
    else:
        _write_tiff(mask.astype(np.float32), path)


def save_confidence(conf: np.ndarray, path: PathLike, format: str | None = None) -> None:
    path, fmt = _resolve(path, format)
    conf = np.asarray(conf, dtype=np.float64)
    if conf.ndim != 2:
        raise RasterFormatError(f"confidence map must be 2-D, got shape {conf.shape}")
    if fmt == "png":
        _write_png(confidence_to_png16(conf), path)
        return
    if conf.size and (conf.min() < 0 or conf.max() > 1):
        raise RasterFormatError("confidence values must lie in [0, 1]")
    if fmt == "raw":
        _write_raw(conf, path)
    else:
        _write_tiff(conf, path)


def save_raster(obj: Raster | np.ndarray, path: PathLike, format: str | None = None) -> None:
    """Persist a :class:`Raster`, a ``bool`` mask, or a float confidence map.

    Plain arrays are dispatched on dtype: ``bool`` is a binary mask and any
    floating dtype is a confidence map.
    """
    if isinstance(obj, Raster):
        path, fmt = _resolve(path, format)
        if fmt == "raw":
            _write_raw(obj.data, path, obj.nodata)
        elif fmt == "png":
            _write_png(obj.data, path)
        else:
            _write_tiff(obj.data, path)
        return
    arr = np.asarray(obj)
    if arr.dtype == bool:
        save_mask(arr, path, format)
    elif arr.dtype.kind == "f":
        save_confidence(arr, path, format)
    else:
        raise TypeError(f"cannot save array of dtype {arr.dtype}; wrap it in Raster")
