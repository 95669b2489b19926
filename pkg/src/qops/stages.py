"""Linear pixel pipelines that run whole-image or tile by tile.

A pipeline is a list of :class:`Map` stages (pure per-pixel functions of a
``(h, w, C)`` block) and :class:`Normalize` stages (min-max rescaling whose
ranges are global reductions).  Running tile by tile merges per-tile
min/max partials before any rescaling, so the result does not depend on
the tiling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .qimage import NormalizationRange, normalize_values


@dataclass(frozen=True)
class Map:
    """``fn(block, parallel) -> block``; must act on each pixel independently."""

    fn: Callable[[np.ndarray, bool], np.ndarray]
    name: str = ""


@dataclass(frozen=True)
class Normalize:
    """Rescale every channel of the block to [0, 1].

    ``mode`` is ``per_channel``, ``joint`` or ``truncate``; a ``fixed``
    range overrides it and skips the reduction.
    """

    mode: str = "per_channel"
    fixed: Optional[NormalizationRange] = None

    def __post_init__(self):
        if self.fixed is None and self.mode not in ("per_channel", "joint", "truncate"):
            raise ValueError(f"unknown normalization mode {self.mode!r}")

    @property
    def needs_reduction(self) -> bool:
        return self.fixed is None and self.mode != "truncate"

    def partial(self, block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return block.min(axis=(0, 1)), block.max(axis=(0, 1))

    @staticmethod
    def merge(parts) -> tuple[np.ndarray, np.ndarray]:
        lo = np.minimum.reduce([p[0] for p in parts])
        hi = np.maximum.reduce([p[1] for p in parts])
        return lo, hi

    def bounds(self, lo: np.ndarray, hi: np.ndarray):
        if self.mode == "joint":
            return np.full_like(lo, lo.min()), np.full_like(hi, hi.max())
        return lo, hi

    def apply(self, block: np.ndarray, bounds) -> np.ndarray:
        if self.fixed is not None:
            if self.fixed.mode == "truncate":
                return np.clip(block, 0.0, 1.0)
            if block.shape[-1] != 3:
                raise ValueError("a fixed range needs a three-channel block")
            lo, hi = np.asarray(self.fixed.mins), np.asarray(self.fixed.maxs)
        elif bounds is None:
            return np.clip(block, 0.0, 1.0)
        else:
            lo, hi = bounds
        out = np.empty(block.shape, dtype=np.float64)
        for k in range(block.shape[-1]):
            out[..., k] = normalize_values(block[..., k], float(lo[k]), float(hi[k]))
        return out


Stage = Map | Normalize


def run(stages: Sequence[Stage], data: np.ndarray, parallel: bool = True) -> np.ndarray:
    for st in stages:
        if isinstance(st, Map):
            data = st.fn(data, parallel)
        else:
            bounds = st.bounds(*st.partial(data)) if st.needs_reduction else None
            data = st.apply(data, bounds)
    return data


def tile_slices(height: int, width: int, tile: int):
    if tile < 1:
        raise ValueError("tile size must be >= 1")
    return [
        (slice(r, min(r + tile, height)), slice(c, min(c + tile, width)))
        for r in range(0, height, tile)
        for c in range(0, width, tile)
    ]


def run_tiled(stages: Sequence[Stage], data: np.ndarray, tile: int, threads: int = 1) -> np.ndarray:
    """Same result as :func:`run`, computed on ``tile x tile`` blocks."""
    h, w = data.shape[:2]
    tiles = tile_slices(h, w, tile)
    pool = ThreadPoolExecutor(max_workers=max(1, threads)) if threads > 1 else None

    def each(fn):
        if pool is None:
            return [fn(t) for t in tiles]
        return list(pool.map(fn, tiles))

    def assemble(blocks):
        out = np.empty((h, w) + blocks[0].shape[2:], dtype=blocks[0].dtype)
        for t, b in zip(tiles, blocks):
            out[t] = b
        return out

    try:
        for st in stages:
            src = data
            if isinstance(st, Map):
                data = assemble(each(lambda t: st.fn(src[t], False)))
            else:
                bounds = None
                if st.needs_reduction:
                    bounds = st.bounds(*st.merge(each(lambda t: st.partial(src[t]))))
                data = assemble(each(lambda t: st.apply(src[t], bounds)))
    finally:
        if pool is not None:
            pool.shutdown()
    return data
