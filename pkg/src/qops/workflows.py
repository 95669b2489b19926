"""End-to-end image procedures built on the orthogonal planes split.

Every procedure takes an 8-bit raster (``(H, W, 3)`` RGB or ``(H, W)``
gray) or a :class:`~qops.qimage.QuaternionImage` and returns 8-bit rasters.
Those that are a chain of per-pixel maps and min-max reductions are exposed
as :class:`Workflow` objects so :func:`qops.pipeline.tile_apply` can run
them tile by tile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import BadChannelSelection, ZeroEncoding
from .metrics import channel_stats
from .qimage import NormalizationRange, QuaternionImage, as_rgb, from_rgb, quantize
from .quaternion import Direction
from .split import Sign, SplitSpec, mu
from .stages import Map, Normalize, run, run_tiled
from .stain import StainBasis

# floor applied to channels before any log or division (black pixels)
EPS = 1e-6
CHANNELS = "rgb"


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContrastParams:
    alpha: float
    beta: float
    gamma: float
    delta: float
    c_u: Direction = Direction(1.0, 1.0, 1.0)
    c_l: Direction = Direction(0.01, 0.01, 0.01)

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"contrast parameter {name} must be finite")
            object.__setattr__(self, name, v)

    @classmethod
    def natural(cls) -> "ContrastParams":
        """Preset for natural and histology images."""
        return cls(10.0, 1.0, -1.0, 1.0)

    @classmethod
    def ct(cls) -> "ContrastParams":
        """Preset for CT-like grayscale scans."""
        return cls(1.0, 1e5, 1e4, 1e4)

    @classmethod
    def preset(cls, name: str) -> "ContrastParams":
        presets = {"natural": cls.natural, "histology": cls.natural, "ct": cls.ct}
        try:
            return presets[name.lower()]()
        except KeyError:
            raise ValueError(f"unknown contrast preset {name!r}; expected one of {sorted(presets)}") from None


@dataclass(frozen=True)
class DecolorP2bParams:
    f_a: float = 0.68
    f_b: float = 1.80
    f_1: float = 0.36
    f_2: float = 1.30
    f_3: float = 0.07

    def __post_init__(self):
        for name in ("f_a", "f_b", "f_1", "f_2", "f_3"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, v)


def parse_keep(keep) -> tuple[int, ...]:
    """Channel selector: ``"r,b"``, ``"rb"``, ``("r", "b")`` or ``(0, 2)``."""
    if isinstance(keep, str):
        items = [s for s in keep.replace(",", " ").split()]
        if len(items) == 1 and len(items[0]) > 1 and all(ch in CHANNELS for ch in items[0].lower()):
            items = list(items[0])
    else:
        items = list(keep)
    out = []
    for it in items:
        if isinstance(it, str):
            it = it.strip().lower()
            if it not in CHANNELS:
                raise BadChannelSelection(f"unknown channel {it!r}; use r, g or b")
            out.append(CHANNELS.index(it))
        elif isinstance(it, (int, np.integer)) and 0 <= int(it) <= 2:
            out.append(int(it))
        else:
            raise BadChannelSelection(f"bad channel selector {it!r}")
    if not out:
        raise BadChannelSelection("no channels selected")
    return tuple(out)


@dataclass(frozen=True)
class RestainParams:
    """Targets and knobs for re-staining.

    ``keep[k]`` names the channel that carries stain ``k`` and is painted with
    ``target_colors[k]``.  ``combine`` is ``"or"`` (bitwise) or ``"max"``.
    """

    target_colors: tuple[Direction, ...]
    keep: tuple[int, ...]
    x_scale: float = 0.30
    recolor_steps: tuple[SplitSpec, ...] = ()
    combine: str = "or"

    def __post_init__(self):
        colors = tuple(c if isinstance(c, Direction) else Direction(*c) for c in self.target_colors)
        object.__setattr__(self, "target_colors", colors)
        object.__setattr__(self, "keep", parse_keep(self.keep))
        object.__setattr__(self, "recolor_steps", tuple(self.recolor_steps))
        if not 2 <= len(colors) <= 3:
            raise ValueError(f"re-staining supports 2 or 3 target colors, got {len(colors)}")
        if any(c.is_zero for c in colors):
            raise ValueError("target colors must be nonzero (black cannot be painted)")
        if not 0.0 < float(self.x_scale) <= 1.0:
            raise ValueError(f"x_scale must lie in (0, 1], got {self.x_scale}")
        if len(self.keep) != len(colors):
            raise BadChannelSelection(f"need one kept channel per target color ({len(colors)}), got {len(self.keep)}")
        if len(self.recolor_steps) != len(colors) - 1 and len(colors) == 3:
            raise ValueError(f"three colors need exactly 2 re-colorization steps, got {len(self.recolor_steps)}")
        if self.combine not in ("or", "max"):
            raise ValueError(f"combine must be 'or' or 'max', got {self.combine!r}")

    @property
    def n_c(self) -> int:
        return len(self.target_colors)


DEFAULT_RESTAIN_STEPS = (SplitSpec.from_mu("plus", 10, 11), SplitSpec.from_mu("plus", 7, 8))
DEFAULT_STAINSEP_STEPS = (SplitSpec.from_mu("plus", 3, 8), SplitSpec.from_mu("plus", 8, 10))


# ---------------------------------------------------------------------------
# per-pixel building blocks, all ``(block, parallel) -> block``
# ---------------------------------------------------------------------------


def _chain(*fns) -> Callable[[np.ndarray, bool], np.ndarray]:
    def run_all(b, parallel):
        for fn in fns:
            b = fn(b, parallel)
        return b

    return run_all


def _split(spec: SplitSpec):
    f, g, s = spec.f.as_tuple(), spec.g.as_tuple(), spec.sign.value
    return lambda b, par: kernels.split_image(b, f, g, s, parallel=par)


def _drop_scalar(b, par):
    return b[..., 1:]


def _lift(b, par):
    out = np.zeros(b.shape[:2] + (4,), dtype=np.float64)
    out[..., 1:] = b
    return out


def _floor_eps(b, par):
    out = b.copy()
    np.maximum(out[..., 1:], EPS, out=out[..., 1:])
    return out


def _log_exp(b, par):
    return kernels.log_exp(b, parallel=par)


def _channel_mean(b, par):
    return (b[..., 0:1] + b[..., 1:2] + b[..., 2:3]) / 3.0


def _quantize(b, par):
    return quantize(b)


def _clip01(b, par):
    return np.clip(b, 0.0, 1.0)


def _select(idx: Sequence[int]):
    idx = list(idx)
    return lambda b, par: b[..., idx]


_PREPROCESS = _chain(_floor_eps, _log_exp, _drop_scalar)


def _input(image) -> np.ndarray:
    if isinstance(image, QuaternionImage):
        return image.data
    return from_rgb(image).data


@dataclass(frozen=True)
class Workflow:
    """A tileable procedure: stages plus how to present the final block.

    ``output`` is ``rgb`` (``(H, W, 3)``), ``gray`` (``(H, W)``) or ``grays``
    (tuple of ``(H, W)``).
    """

    name: str
    stages: tuple
    output: str = "rgb"

    def finish(self, block: np.ndarray):
        if self.output == "gray":
            return block[..., 0]
        if self.output == "grays":
            return tuple(block[..., k] for k in range(block.shape[-1]))
        return block

    def __call__(self, image, parallel: bool = True):
        return self.finish(run(self.stages, _input(image), parallel))

    def tiled(self, image, tile: int, threads: int = 1):
        return self.finish(run_tiled(self.stages, _input(image), tile, threads))


# ---------------------------------------------------------------------------
# re-colorization
# ---------------------------------------------------------------------------


def _normalizer(rng) -> Normalize:
    if isinstance(rng, NormalizationRange):
        if rng.mode == "truncate":
            return Normalize("truncate")
        return Normalize(fixed=rng)
    return Normalize(rng)


def recolor_workflow(spec: SplitSpec, rng: NormalizationRange | str = "per_channel") -> Workflow:
    return Workflow(
        "recolor",
        (Map(_chain(_split(spec), _drop_scalar), "split"), _normalizer(rng), Map(_quantize, "encode")),
    )


def recolorize(image, spec: SplitSpec, rng: NormalizationRange | str = "per_channel") -> np.ndarray:
    """Encode one half of the split as an RGB rendition.

    ``rng`` is a normalization mode or a fixed (e.g. exemplar) range.
    """
    return recolor_workflow(spec, rng)(image)


def split_halves(image, f: Direction, g: Direction) -> tuple[QuaternionImage, QuaternionImage]:
    """Both halves of the split before any normalization."""
    q = _input(image)
    plus = kernels.split_image(q, f.as_tuple(), g.as_tuple(), 1)
    minus = kernels.split_image(q, f.as_tuple(), g.as_tuple(), -1)
    return QuaternionImage(plus), QuaternionImage(minus)


# ---------------------------------------------------------------------------
# de-colorization
# ---------------------------------------------------------------------------

P2A_WEIGHTS = (0.30, 0.50, 0.05)


def decolor_workflow(f: Direction) -> Workflow:
    if not f.unit:
        f = f.normalized()
    spec = SplitSpec(Sign.MINUS, f, f)
    return Workflow(
        "decolor",
        (
            Map(_chain(_split(spec), _drop_scalar, _channel_mean), "split-mean"),
            Normalize("per_channel"),
            Map(_quantize, "encode"),
        ),
        "gray",
    )


def decolorize(image, f: Direction) -> np.ndarray:
    """Grayscale from the mean of the three channels of ``q-`` under ``f()f``."""
    return decolor_workflow(f)(image)


def decolorize_p1(image) -> np.ndarray:
    return decolorize(image, mu(7))


def decolorize_p2a(image) -> np.ndarray:
    return decolorize(image, Direction(*P2A_WEIGHTS).normalized())


def encoding_values(image, params: DecolorP2bParams = DecolorP2bParams()) -> tuple[float, float, float]:
    """Per-image channel weights from matrix norms and means.

    The three statistics of each kind are mixed using the products of the
    unmixed values, then combined per channel and raised to ``f_b``.
    """
    rgb = as_rgb(image)
    stats = [channel_stats(rgb[..., k].astype(np.float64)) for k in range(3)]

    def mixed(values):
        prod = values[0] * values[1] * values[2]
        return [params.f_a * v + prod for v in values]

    means = mixed([s.mean for s in stats])
    n1 = mixed([s.norm1 for s in stats])
    n2 = mixed([s.norm2 for s in stats])
    fro = mixed([s.frobenius for s in stats])
    factors = (params.f_1, params.f_2, params.f_3)
    ev = tuple(factors[k] * (means[k] * n1[k] + n2[k] * fro[k]) ** params.f_b for k in range(3))
    if not any(ev):
        raise ZeroEncoding("all encoding values are zero (image is black)")
    return ev


def p2b_workflow(image, params: DecolorP2bParams = DecolorP2bParams()) -> Workflow:
    return decolor_workflow(Direction(*encoding_values(image, params)).normalized())


def decolorize_p2b(image, params: DecolorP2bParams = DecolorP2bParams()) -> np.ndarray:
    if isinstance(image, QuaternionImage):
        image = quantize(image.data[..., 1:])
    return p2b_workflow(image, params)(image)


# ---------------------------------------------------------------------------
# contrast enhancement
# ---------------------------------------------------------------------------


def _contrast(p: ContrastParams):
    cu, cl = p.c_u.as_tuple(), p.c_l.as_tuple()
    return lambda b, par: kernels.contrast(b, p.alpha, p.beta, p.gamma, p.delta, cu, cl, parallel=par)


def contrast_workflow(p: ContrastParams) -> Workflow:
    return Workflow(
        "contrast",
        (
            Map(_chain(_floor_eps, _contrast(p), _drop_scalar), "contrast"),
            Normalize("per_channel"),
            Map(_quantize, "encode"),
        ),
    )


def contrast_enhance(image, p: ContrastParams = ContrastParams.natural()) -> np.ndarray:
    return contrast_workflow(p)(image)


def preprocess_transform(image) -> QuaternionImage:
    """``ln(q) exp(q)`` per pixel after the black-pixel floor; scalars kept."""
    return QuaternionImage(_chain(_floor_eps, _log_exp)(_input(image), True))


# ---------------------------------------------------------------------------
# re-staining
# ---------------------------------------------------------------------------

_GRAY_PLUS = SplitSpec(Sign.PLUS, mu(7), mu(7))


def _stain_channels(keep: Sequence[int]):
    """Normalized preprocessed channels -> chroma channels named by ``keep``."""
    return _chain(_lift, _split(_GRAY_PLUS), _drop_scalar, _select(keep))


def _paint(colors: Sequence[Direction], x_scale: float, combine: str):
    """Stack of stain channels -> merged 8-bit RGB painted in target colors."""
    specs = [SplitSpec(Sign.MINUS, c, c) for c in colors]

    def paint(b, par):
        out = None
        for k, spec in enumerate(specs):
            c = np.clip(b[..., k] / x_scale, 0.0, 1.0)
            q = _split(spec)(_lift(np.repeat(c[..., None], 3, axis=2), par), par)
            layer = quantize(np.clip(q[..., 1:], 0.0, 1.0))
            if out is None:
                out = layer
            elif combine == "or":
                out = np.bitwise_or(out, layer)
            else:
                out = np.maximum(out, layer)
        return out

    return paint


def restain_workflow(params: RestainParams) -> Workflow:
    if params.n_c != 2:
        raise ValueError("the tileable re-staining workflow handles two colors; use restain_multi")
    return Workflow(
        "restain",
        (
            Map(_PREPROCESS, "preprocess"),
            Normalize("joint"),
            Map(_chain(_stain_channels(params.keep), _paint(params.target_colors, params.x_scale, params.combine)), "paint"),
        ),
    )


def restain_two(image, params: RestainParams) -> np.ndarray:
    """Paint the two kept stain channels in the two target colors."""
    return restain_workflow(params)(image)


def _recolored_stain_channel(image, step: SplitSpec, channel: int) -> np.ndarray:
    recolored = recolorize(image, step)
    b = from_rgb(recolored).data[..., 1:]
    b = Normalize("joint").apply(b, Normalize("joint").bounds(b.min(axis=(0, 1)), b.max(axis=(0, 1))))
    return _stain_channels([channel])(b, True)


def restain_multi(image, params: RestainParams) -> np.ndarray:
    """Three-color re-staining.

    The first stain channel comes from the direct pass; each remaining one
    from the original image re-colorized by the matching ``recolor_steps``
    entry.
    """
    if params.n_c != 3:
        raise ValueError("restain_multi needs three target colors")
    if len(params.recolor_steps) != 2:
        raise ValueError(f"restain_multi needs two re-colorization steps, got {len(params.recolor_steps)}")
    direct = run((Map(_PREPROCESS), Normalize("joint"), Map(_stain_channels(params.keep[:1]))), _input(image))
    extra = [_recolored_stain_channel(_as_raster(image), s, params.keep[k + 1]) for k, s in enumerate(params.recolor_steps)]
    stack = np.concatenate([direct] + extra, axis=-1)
    return _paint(params.target_colors, params.x_scale, params.combine)(stack, True)


def _as_raster(image) -> np.ndarray:
    if isinstance(image, QuaternionImage):
        return quantize(image.data[..., 1:])
    return as_rgb(image)


# ---------------------------------------------------------------------------
# stain separation
# ---------------------------------------------------------------------------


def _basis_spec(basis: StainBasis) -> SplitSpec:
    return SplitSpec(Sign.PLUS, basis.s1, basis.s2)


def stainsep_workflow(basis: StainBasis, keep) -> Workflow:
    keep = parse_keep(keep)
    return Workflow(
        "stainsep",
        (
            Map(_PREPROCESS, "preprocess"),
            Normalize("joint"),
            Map(_chain(_lift, _split(_basis_spec(basis)), _drop_scalar, _clip01, _select(keep), _quantize), "separate"),
        ),
        "grays",
    )


def stain_separate_two(image, basis: StainBasis | None = None, keep="r,b") -> tuple[np.ndarray, ...]:
    """One 8-bit map per kept channel of the split preprocessed image."""
    return stainsep_workflow(basis or StainBasis.mu7(), keep)(image)


def stain_separate_multi(
    image,
    basis: StainBasis | None = None,
    recolor_steps: Sequence[SplitSpec] = DEFAULT_STAINSEP_STEPS,
    keep="b,r,r",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Counterstain from the direct pass, two more stains after re-colorization.

    ``keep`` names one channel per pass: direct, then each recolor step.
    """
    keep = parse_keep(keep)
    if len(recolor_steps) != 2:
        raise ValueError(f"three-stain separation needs two re-colorization steps, got {len(recolor_steps)}")
    if len(keep) != 3:
        raise BadChannelSelection("three-stain separation needs one channel per pass (3)")
    basis = basis or StainBasis.mu7()
    raster = _as_raster(image)
    (first,) = stain_separate_two(raster, basis, keep[:1])
    rest = [stain_separate_two(recolorize(raster, s), basis, keep[k + 1 : k + 2])[0] for k, s in enumerate(recolor_steps)]
    return (first, rest[0], rest[1])


GREEN_BLUE = (Direction(0.0, 1.0, 0.0), Direction(0.0, 0.0, 1.0))


def separate_via_restain(image, keep="r,b", x_scale: float = 0.30, basis: StainBasis | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Fallback for poorly separated stains: paint them green and blue first,
    then separate the green and blue channels of the result."""
    painted = restain_two(image, RestainParams(GREEN_BLUE, keep, x_scale))
    return stain_separate_two(painted, basis, "g,b")
