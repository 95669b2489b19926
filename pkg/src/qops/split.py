"""The orthogonal planes split ``q = q+ + q-`` with ``q+- = (q +- f q g) / 2``.

``f`` and ``g`` are pure quaternions.  For unit directions the map
``q -> f q g`` fixes ``q+`` and negates ``q-``, and the two halves lie in
orthogonal planes.  Non-unit directions (stain vectors, picked colors) are
accepted; only the sum identity is guaranteed for them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import IndexOutOfRange, ZeroDirection
from .quaternion import Direction, Quaternion, hamilton

_R2 = 1.0 / math.sqrt(2.0)
_R3 = 1.0 / math.sqrt(3.0)

# index -> (x, y, z); the gray axis is 7, its negated-component siblings 11..13
_MU_TABLE = {
    1: (1.0, 0.0, 0.0),
    2: (0.0, 1.0, 0.0),
    3: (0.0, 0.0, 1.0),
    4: (_R2, _R2, 0.0),
    5: (_R2, 0.0, _R2),
    6: (0.0, _R2, _R2),
    7: (_R3, _R3, _R3),
    8: (-_R2, _R2, 0.0),
    9: (-_R2, 0.0, _R2),
    10: (0.0, -_R2, _R2),
    11: (-_R3, _R3, _R3),
    12: (_R3, -_R3, _R3),
    13: (_R3, _R3, -_R3),
}
MU_COUNT = len(_MU_TABLE)


def mu(index: int) -> Direction:
    """Catalog direction ``mu_index`` for ``index`` in 1..13."""
    if isinstance(index, bool) or int(index) != index or index not in _MU_TABLE:
        raise IndexOutOfRange(f"mu index must be an integer in 1..{MU_COUNT}, got {index!r}")
    return Direction(*_MU_TABLE[int(index)])


def mu_index(d: Direction) -> int | None:
    """Catalog index of ``d`` if it matches an entry exactly, else None."""
    t = d.as_tuple()
    for k, v in _MU_TABLE.items():
        if v == t:
            return k
    return None


class Sign(Enum):
    PLUS = 1
    MINUS = -1

    @classmethod
    def parse(cls, value) -> "Sign":
        if isinstance(value, Sign):
            return value
        text = str(value).strip().lower()
        if text in ("plus", "+", "p", "1", "+1"):
            return cls.PLUS
        if text in ("minus", "-", "m", "-1"):
            return cls.MINUS
        raise ValueError(f"sign must be 'plus' or 'minus', got {value!r}")

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class SplitSpec:
    sign: Sign
    f: Direction
    g: Direction

    def __post_init__(self):
        object.__setattr__(self, "sign", Sign.parse(self.sign))
        for name in ("f", "g"):
            d = getattr(self, name)
            if not isinstance(d, Direction):
                d = Direction(*d)
                object.__setattr__(self, name, d)
            if d.is_zero:
                raise ZeroDirection(f"split direction {name} is zero")

    @classmethod
    def from_mu(cls, sign, i: int, j: int | None = None) -> "SplitSpec":
        return cls(Sign.parse(sign), mu(i), mu(i if j is None else j))

    @property
    def unit(self) -> bool:
        return self.f.unit and self.g.unit


def apply_map(q: Quaternion, f: Direction, g: Direction) -> Quaternion:
    """``f * q * g``."""
    return hamilton(f.as_quaternion(), hamilton(q, g.as_quaternion()))


def _halves(q: Quaternion, m: Quaternion) -> tuple[Quaternion, Quaternion]:
    a = q.as_tuple()
    plus = tuple(0.5 * (qa + ma) for qa, ma in zip(a, m.as_tuple()))
    minus = tuple(qa - pa for qa, pa in zip(a, plus))
    return Quaternion(*plus), Quaternion(*minus)


def split_pair(q: Quaternion, f: Direction, g: Direction) -> tuple[Quaternion, Quaternion]:
    """``(q+, q-)`` from a single evaluation of ``f q g``."""
    return _halves(q, apply_map(q, f, g))


def split(q: Quaternion, spec: SplitSpec) -> Quaternion:
    plus, minus = split_pair(q, spec.f, spec.g)
    return plus if spec.sign is Sign.PLUS else minus


def split_array(q: np.ndarray, spec: SplitSpec, *, parallel: bool = True) -> np.ndarray:
    """Split every quaternion of a ``(..., 4)`` array."""
    return kernels.split_image(q, spec.f.as_tuple(), spec.g.as_tuple(), spec.sign.value, parallel=parallel)
