"""Stain vectors from optical density, and a Beer-Lambert image generator.

The estimator follows the usual Macenko recipe: convert to optical density,
drop near-transparent pixels, project onto the top two principal directions
and take robust extreme angles in that plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStains
from .qimage import as_rgb
from .quaternion import Direction

OD_EPS = 1e-6
_MIN_PIXELS = 10
# second eigenvalue must carry at least this fraction of the first
_RANK_RATIO = 1e-3


@dataclass(frozen=True)
class StainBasis:
    """Split directions for stain separation.

    ``source`` is ``"mu7"``, ``"macenko"`` or ``"manual"``; ``s3`` is only
    filled for three-stain manual bases.
    """

    s1: Direction
    s2: Direction
    source: str = "manual"
    s3: Direction | None = None

    def __post_init__(self):
        for name in ("s1", "s2", "s3"):
            d = getattr(self, name)
            if d is None:
                continue
            if not isinstance(d, Direction):
                d = Direction(*d)
                object.__setattr__(self, name, d)
            if d.is_zero:
                raise DegenerateStains(f"stain vector {name} is zero")
        if self.source not in ("mu7", "macenko", "manual"):
            raise ValueError(f"unknown stain basis source {self.source!r}")

    @classmethod
    def mu7(cls) -> "StainBasis":
        from .split import mu

        return cls(mu(7), mu(7), "mu7")

    def swapped(self) -> "StainBasis":
        return StainBasis(self.s2, self.s1, self.source, self.s3)


def optical_density(raster) -> np.ndarray:
    """``-ln((v + eps) / (1 + eps))`` per channel; zero for white, always >= 0."""
    v = as_rgb(raster).astype(np.float64) / 255.0
    return -np.log((v + OD_EPS) / (1.0 + OD_EPS))


def _orient(v: np.ndarray) -> np.ndarray:
    """Flip so the largest-magnitude component is positive."""
    return v if v[np.argmax(np.abs(v))] >= 0 else -v


def estimate_macenko(raster, od_threshold: float = 0.15, percentile: float = 1.0, swap: bool = False) -> StainBasis:
    """Two unit stain vectors, ``s1`` the one with larger red optical density.

    Pixels whose OD vector is shorter than ``od_threshold`` are treated as
    background.
    """
    od = optical_density(raster).reshape(-1, 3)
    od = od[np.linalg.norm(od, axis=1) >= od_threshold]
    if od.shape[0] < _MIN_PIXELS:
        raise DegenerateStains(f"only {od.shape[0]} pixels above OD threshold {od_threshold}")

    cov = np.cov(od, rowvar=False)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[0] <= 0.0 or evals[1] < _RANK_RATIO * evals[0]:
        raise DegenerateStains("optical density cloud spans fewer than two directions")
    e1 = _orient(evecs[:, 0])
    e2 = _orient(evecs[:, 1])

    proj = od @ np.stack((e1, e2), axis=1)
    phi = np.arctan2(proj[:, 1], proj[:, 0])
    lo, hi = np.percentile(phi, [percentile, 100.0 - percentile])
    vecs = []
    for a in (lo, hi):
        v = np.cos(a) * e1 + np.sin(a) * e2
        v = _orient(v)
        vecs.append(v / np.linalg.norm(v))
    va, vb = vecs
    if vb[0] > va[0]:
        va, vb = vb, va
    basis = StainBasis(Direction(*va), Direction(*vb), "macenko")
    return basis.swapped() if swap else basis


def forward_model(v1, v2, c1, c2) -> np.ndarray:
    """RGB raster ``round(255 exp(-(c1 v1 + c2 v2)))`` from two stain maps."""
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    c1 = np.asarray(c1, dtype=np.float64)
    c2 = np.asarray(c2, dtype=np.float64)
    if c1.shape != c2.shape:
        raise ValueError(f"concentration maps differ in shape: {c1.shape} vs {c2.shape}")
    if np.any(c1 < 0) or np.any(c2 < 0):
        raise ValueError("concentrations must be non-negative")
    od = c1[..., None] * v1 + c2[..., None] * v2
    return np.floor(255.0 * np.exp(-od) + 0.5).astype(np.uint8)


def angle_deg(a, b) -> float:
    """Unsigned angle between two 3-vectors in degrees."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))
