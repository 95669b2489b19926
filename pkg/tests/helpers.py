"""Synthetic rasters shared by the tests."""

import numpy as np


def gray_ramp(h=16, w=256, lo=0, hi=255):
    row = np.round(np.linspace(lo, hi, w)).astype(np.uint8)
    return np.repeat(row[None, :], h, axis=0)


def checkerboard(h=16, w=16, a=0, b=255, cell=2):
    yy, xx = np.mgrid[0:h, 0:w]
    return np.where(((yy // cell) + (xx // cell)) % 2 == 0, a, b).astype(np.uint8)


def blocks_image(colors, size=20, gap=10, background=245):
    """Square blocks of ``colors`` on a uniform background, left to right."""
    n = len(colors)
    img = np.full((size + 2 * gap, n * (size + gap) + gap, 3), background, np.uint8)
    masks = []
    for k, c in enumerate(colors):
        sl = (slice(gap, gap + size), slice(gap + k * (size + gap), gap + k * (size + gap) + size))
        img[sl] = c
        masks.append(sl)
    return img, masks


# unit stain directions used by the synthetic Beer-Lambert images
def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


HEMATOXYLIN = _unit((0.65, 0.70, 0.29))
EOSIN = _unit((0.07, 0.99, 0.11))
DAB = _unit((0.27, 0.57, 0.78))


def stain_fields(n=128, seeds=(1, 2), sigma=6.0, gain=1.5):
    """Two smooth concentration maps with disjoint support.

    Each pixel carries whichever of two smoothed noise fields is larger, so
    every absorbing pixel is stained by exactly one stain.
    """
    from scipy.ndimage import gaussian_filter

    f1, f2 = (gaussian_filter(np.random.default_rng(s).uniform(0, 1, (n, n)), sigma) for s in seeds)
    f1 = (f1 - f1.min()) / (f1.max() - f1.min())
    f2 = (f2 - f2.min()) / (f2.max() - f2.min())
    m = f1 > f2
    return np.where(m, f1, 0.0) * gain, np.where(~m, f2, 0.0) * gain


def two_stain_blocks(n=96, seed=7):
    """Two rectangles of random concentration on an unstained background."""
    rs = np.random.default_rng(seed)
    c1 = np.zeros((n, n))
    c2 = np.zeros((n, n))
    c1[16:80, 8:44] = rs.uniform(0.4, 1.5, (64, 36))
    c2[16:80, 52:88] = rs.uniform(0.4, 1.5, (64, 36))
    return c1, c2


def hue_deg(rgb):
    """Hexcone hue in degrees of an ``(..., 3)`` uint8 raster."""
    import colorsys

    flat = np.asarray(rgb, dtype=np.float64).reshape(-1, 3) / 255.0
    return np.array([colorsys.rgb_to_hsv(*p)[0] * 360.0 for p in flat]).reshape(np.shape(rgb)[:-1])


def hue_distance(a, b):
    d = np.abs(np.asarray(a) - b) % 360.0
    return np.minimum(d, 360.0 - d)


def pearson(a, b):
    return float(np.corrcoef(np.ravel(a).astype(np.float64), np.ravel(b).astype(np.float64))[0, 1])
