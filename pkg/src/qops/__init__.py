"""Quaternion orthogonal planes split and the image workflows built on it."""

from .errors import (
    BadChannelSelection,
    ConfigError,
    DegenerateRange,
    DegenerateStains,
    DimensionMismatch,
    ImageTooSmall,
    IndexOutOfRange,
    QopsError,
    UndefinedLog,
    UnsupportedRaster,
    ZeroDirection,
    ZeroEncoding,
    ZeroQuaternion,
)
from .qimage import (
    NormalizationRange,
    QuaternionImage,
    exemplar_ranges,
    export_gamut,
    extract_channels,
    from_rgb,
    read_png,
    to_rgb,
    write_png,
)
from .quaternion import Direction, PolarForm, Quaternion
from .split import Sign, SplitSpec, apply_map, mu, split, split_pair
from .stain import StainBasis, estimate_macenko, forward_model
from .workflows import (
    ContrastParams,
    DecolorP2bParams,
    RestainParams,
    contrast_enhance,
    decolorize,
    decolorize_p1,
    decolorize_p2a,
    decolorize_p2b,
    preprocess_transform,
    recolorize,
    restain_multi,
    restain_two,
    stain_separate_multi,
    stain_separate_two,
)

__version__ = "0.1.0"
