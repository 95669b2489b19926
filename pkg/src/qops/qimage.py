"""Quaternion image model, channel normalization and raster I/O.

An RGB raster ``(H, W, 3) uint8`` becomes a ``(H, W, 4)`` float64 array of
pure quaternions ``(0, r/255, g/255, b/255)``.  Single channels are plain
``(H, W)`` float arrays.
"""

from __future__ import annotations

import colorsys
import csv
import os
import tempfile
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, UnsupportedRaster
from .split import SplitSpec, split_array

# max - min below this is a degenerate range: values pass through clamped
DEGENERATE_SPAN = 1e-12
MODES = ("per_channel", "joint", "truncate", "exemplar")


class QuaternionImage:
    """``H x W`` grid of quaternions stored as a ``(H, W, 4)`` float64 array."""

    __slots__ = ("_data",)

    def __init__(self, data):
        data = np.array(data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 4:
            raise ValueError(f"expected (H, W, 4) array, got shape {data.shape}")
        data.setflags(write=False)
        self._data = data

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def height(self) -> int:
        return self._data.shape[0]

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape[:2]

    def __repr__(self):
        return f"QuaternionImage({self.height}x{self.width})"


def as_rgb(raster) -> np.ndarray:
    """Validate an 8-bit raster; grayscale ``(H, W)`` is lifted to RGB."""
    a = np.asarray(raster)
    if a.dtype != np.uint8:
        if not np.issubdtype(a.dtype, np.integer) or a.size and (a.min() < 0 or a.max() > 255):
            raise UnsupportedRaster(f"expected 8-bit channels, got dtype {a.dtype}")
        a = a.astype(np.uint8)
    if a.ndim == 2:
        a = np.repeat(a[:, :, None], 3, axis=2)
    if a.ndim != 3 or a.shape[2] != 3:
        raise UnsupportedRaster(f"expected (H, W) or (H, W, 3) raster, got shape {a.shape}")
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise UnsupportedRaster("empty raster")
    return a


def from_rgb(raster) -> QuaternionImage:
    rgb = as_rgb(raster)
    data = np.zeros(rgb.shape[:2] + (4,), dtype=np.float64)
    data[..., 1:] = rgb / 255.0
    return QuaternionImage(data)


def _array(q) -> np.ndarray:
    return q.data if isinstance(q, QuaternionImage) else np.asarray(q, dtype=np.float64)


def extract_channels(q) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The i, j, k coefficient grids; the scalar grid is dropped."""
    a = _array(q)
    return a[..., 1].copy(), a[..., 2].copy(), a[..., 3].copy()


def compose(r, g, b, scalar=None) -> QuaternionImage:
    r, g, b = (np.asarray(c, dtype=np.float64) for c in (r, g, b))
    if not (r.shape == g.shape == b.shape):
        raise DimensionMismatch(f"channel shapes differ: {r.shape}, {g.shape}, {b.shape}")
    w = np.zeros_like(r) if scalar is None else np.asarray(scalar, dtype=np.float64)
    return QuaternionImage(np.stack((w, r, g, b), axis=-1))


def lift_gray(c) -> QuaternionImage:
    """Single channel ``c`` as the gray image ``c (i + j + k)``."""
    return compose(c, c, c)


def normalize_values(c, lo: float, hi: float) -> np.ndarray:
    """Min-max map of ``c`` onto [0, 1]; a degenerate span just clamps."""
    c = np.asarray(c, dtype=np.float64)
    if hi - lo < DEGENERATE_SPAN:
        return np.clip(c, 0.0, 1.0)
    return np.clip((c - lo) / (hi - lo), 0.0, 1.0)


@dataclass(frozen=True)
class NormalizationRange:
    """Per-channel ``(min, max)`` pairs plus the rule that produced them.

    ``truncate`` ignores the pairs and clamps to [0, 1].  A channel whose
    span is below ``DEGENERATE_SPAN`` is passed through clamped.
    """

    mode: str
    mins: tuple[float, float, float] = (0.0, 0.0, 0.0)
    maxs: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown normalization mode {self.mode!r}")
        mins = tuple(float(v) for v in self.mins)
        maxs = tuple(float(v) for v in self.maxs)
        if len(mins) != 3 or len(maxs) != 3:
            raise ValueError("normalization ranges need three channels")
        for lo, hi in zip(mins, maxs):
            if not hi >= lo:
                raise ValueError(f"range max {hi} below min {lo}")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @classmethod
    def truncate(cls) -> "NormalizationRange":
        return cls("truncate")

    @classmethod
    def from_channels(cls, channels: Sequence[np.ndarray], mode: str = "per_channel") -> "NormalizationRange":
        if mode == "truncate":
            return cls.truncate()
        mins = [float(np.min(c)) for c in channels]
        maxs = [float(np.max(c)) for c in channels]
        if mode == "joint":
            mins = [min(mins)] * 3
            maxs = [max(maxs)] * 3
        return cls(mode, tuple(mins), tuple(maxs))

    @classmethod
    def of_image(cls, q, mode: str = "per_channel") -> "NormalizationRange":
        return cls.from_channels(extract_channels(q), mode)

    @property
    def degenerate(self) -> tuple[bool, bool, bool]:
        if self.mode == "truncate":
            return (False, False, False)
        return tuple(hi - lo < DEGENERATE_SPAN for lo, hi in zip(self.mins, self.maxs))

    def merge(self, other: "NormalizationRange") -> "NormalizationRange":
        """Range covering both operands; used to combine per-tile partials."""
        if self.mode != other.mode:
            raise ValueError(f"cannot merge {self.mode} with {other.mode} ranges")
        if self.mode == "truncate":
            return self
        mins = tuple(min(a, b) for a, b in zip(self.mins, other.mins))
        maxs = tuple(max(a, b) for a, b in zip(self.maxs, other.maxs))
        return NormalizationRange(self.mode, mins, maxs)

    def as_exemplar(self) -> "NormalizationRange":
        return NormalizationRange("exemplar", self.mins, self.maxs)

    def apply_channel(self, c: np.ndarray, index: int) -> np.ndarray:
        if self.mode == "truncate":
            return np.clip(np.asarray(c, dtype=np.float64), 0.0, 1.0)
        return normalize_values(c, self.mins[index], self.maxs[index])

    def apply(self, channels: Sequence[np.ndarray]) -> list[np.ndarray]:
        return [self.apply_channel(c, k) for k, c in enumerate(channels)]


def quantize(v) -> np.ndarray:
    """[0, 1] floats to uint8 with round-half-up; out-of-range and nan clamp."""
    v = np.nan_to_num(np.asarray(v, dtype=np.float64), nan=0.0, posinf=1.0, neginf=0.0)
    return np.floor(np.clip(v, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def to_rgb(q, rng: NormalizationRange | str = "per_channel") -> np.ndarray:
    """Drop scalar parts, normalize the three channels, encode as 8-bit RGB."""
    channels = extract_channels(q)
    if isinstance(rng, str):
        rng = NormalizationRange.from_channels(channels, rng)
    return np.stack([quantize(c) for c in rng.apply(channels)], axis=-1)


def exemplar_ranges(exemplar, spec: SplitSpec) -> NormalizationRange:
    """Per-channel ranges of the split exemplar, for reuse on other images."""
    q = split_array(from_rgb(exemplar).data, spec)
    return NormalizationRange.from_channels(extract_channels(q), "exemplar")


def export_gamut(raster, space: str = "rgb") -> tuple[np.ndarray, np.ndarray]:
    """Distinct colors as ``(N, 3)`` coordinates and their pixel counts.

    ``rgb`` gives channel/255; ``hsv`` gives hue in degrees [0, 360) and
    saturation, value in [0, 1].
    """
    rgb = as_rgb(raster).reshape(-1, 3)
    colors, counts = np.unique(rgb, axis=0, return_counts=True)
    pts = colors / 255.0
    if space == "hsv":
        hsv = [colorsys.rgb_to_hsv(*p) for p in pts]
        pts = np.array(hsv, dtype=np.float64).reshape(-1, 3)
        pts[:, 0] = (pts[:, 0] * 360.0) % 360.0
    elif space != "rgb":
        raise ValueError(f"gamut space must be 'rgb' or 'hsv', got {space!r}")
    return pts, counts


def write_gamut_csv(path, points: np.ndarray, counts: np.ndarray) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["c1", "c2", "c3", "count"])
        for p, n in zip(points, counts):
            w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), int(n)])

    atomic_write(path, emit, text=True)


# ---------------------------------------------------------------------------
# raster I/O
# ---------------------------------------------------------------------------


def atomic_write(path, writer, text: bool = False) -> None:
    """Run ``writer(fh)`` on a temp file next to ``path`` then rename it."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=os.path.splitext(path)[1], dir=directory)
    try:
        with os.fdopen(fd, "w" if text else "wb", **({"newline": ""} if text else {})) as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_png(path) -> np.ndarray:
    """8-bit grayscale or RGB raster; grayscale comes back as ``(H, W)``."""
    from PIL import Image

    with Image.open(path) as im:
        if im.mode == "P" and "transparency" not in im.info:
            im = im.convert("RGB")
        elif im.mode == "1":
            im = im.convert("L")
        if im.mode not in ("L", "RGB"):
            raise UnsupportedRaster(f"{path}: unsupported raster mode {im.mode!r} (only 8-bit L and RGB)")
        return np.asarray(im).copy()


def write_png(path, raster) -> None:
    from PIL import Image

    a = np.asarray(raster)
    if a.dtype != np.uint8 or a.ndim not in (2, 3) or (a.ndim == 3 and a.shape[2] != 3):
        raise UnsupportedRaster(f"cannot write raster of dtype {a.dtype} and shape {a.shape}")
    im = Image.fromarray(a, "L" if a.ndim == 2 else "RGB")
    atomic_write(path, lambda fh: im.save(fh, format="PNG"))
