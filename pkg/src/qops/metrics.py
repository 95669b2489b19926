"""Channel matrix statistics and reference image-quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch


@dataclass(frozen=True)
class ChannelStats:
    """Matrix statistics of one 8-bit channel, each divided by 255.

    ``norm1`` is the maximum absolute column sum of the stored ``(H, W)``
    grid (columns run along axis 0).
    """

    norm1: float
    norm2: float
    frobenius: float
    mean: float


def spectral_norm(a, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on ``a.T @ a``.

    Starts from the all-ones vector so the result is deterministic and stops
    once the iterate moves by less than ``tol``.  The eigenvalue comes from
    the Rayleigh quotient, whose error is quadratic in the vector error.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0 or not np.any(a):
        return 0.0
    # homogeneous in a: rescale so a.T @ a neither underflows nor overflows
    s = float(np.max(np.abs(a)))
    a = a / s
    ata = a.T @ a
    v = np.ones(ata.shape[0]) / math.sqrt(ata.shape[0])
    if not np.any(ata @ v):
        # start vector in the null space: restart on the heaviest column
        v = np.zeros(ata.shape[0])
        v[int(np.argmax(np.diag(ata)))] = 1.0
    for _ in range(max_iter):
        w = ata @ v
        w /= np.linalg.norm(w)
        done = np.linalg.norm(w - v) <= tol
        v = w
        if done:
            break
    return s * math.sqrt(max(float(v @ ata @ v), 0.0))


def channel_stats(cc) -> ChannelStats:
    """Statistics of a channel holding raw 0..255 values."""
    c = np.asarray(cc, dtype=np.float64)
    if c.size == 0:
        raise ValueError("channel_stats needs a nonempty channel")
    a = np.abs(c)
    return ChannelStats(
        norm1=float(a.sum(axis=0).max()) / 255.0,
        norm2=spectral_norm(c) / 255.0,
        frobenius=float(np.sqrt(np.sum(c * c))) / 255.0,
        mean=float(c.mean()) / 255.0,
    )


def _unit_scale(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float64) / 255.0


def _check_pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"raster shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    """Mean squared error on [0, 1]-scaled 8-bit rasters."""
    a, b = _check_pair(a, b)
    d = _unit_scale(a) - _unit_scale(b)
    return float(np.mean(d * d))


def psnr(a, b) -> float:
    """``10 log10(1 / MSE)``; identical rasters give ``inf``."""
    m = mse(a, b)
    if m == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / m)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def _ssim_gray(x: np.ndarray, y: np.ndarray, win: np.ndarray, c1: float, c2: float) -> float:
    def blur(z):
        return ndimage.correlate(z, win, mode="nearest")

    mx, my = blur(x), blur(y)
    sxx = blur(x * x) - mx * mx
    syy = blur(y * y) - my * my
    sxy = blur(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def ssim(a, b, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5) on [0, 1] data.

    Color rasters are scored per channel and averaged.
    """
    a, b = _check_pair(a, b)
    x = _unit_scale(a)
    y = _unit_scale(b)
    win = _gaussian_window()
    c1 = (k1 * 1.0) ** 2
    c2 = (k2 * 1.0) ** 2
    if x.ndim == 2:
        return _ssim_gray(x, y, win, c1, c2)
    return float(np.mean([_ssim_gray(x[..., k], y[..., k], win, c1, c2) for k in range(x.shape[-1])]))
