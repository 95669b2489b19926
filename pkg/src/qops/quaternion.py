"""Real quaternion arithmetic on immutable scalar values.

A quaternion is stored as ``(w, x, y, z)`` meaning ``w + x i + y j + z k``.
Multiplication is the Hamilton product (``i j = k``, ``j i = -k``).  Every
function here is pure; array counterparts used by the image pipelines live in
:mod:`qops.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

from .errors import UndefinedLog, ZeroDirection, ZeroQuaternion

# |v| below this is treated as an exactly real quaternion (sin|v|/|v| -> 1)
_TINY = 1e-300
_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class Quaternion:
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        for name in ("w", "x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"quaternion coefficient {name}={value!r} is not finite")
            object.__setattr__(self, name, value)

    @classmethod
    def pure(cls, x: float, y: float, z: float) -> "Quaternion":
        return cls(0.0, x, y, z)

    def __iter__(self) -> Iterator[float]:
        return iter((self.w, self.x, self.y, self.z))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    @property
    def scalar(self) -> float:
        return self.w

    @property
    def vector(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def __add__(self, other):
        if not isinstance(other, Quaternion):
            return NotImplemented
        return add(self, other)

    def __sub__(self, other):
        if not isinstance(other, Quaternion):
            return NotImplemented
        return sub(self, other)

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return hamilton(self, other)
        if isinstance(other, (int, float)):
            return scale(other, self)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return scale(other, self)
        return NotImplemented

    def __abs__(self):
        return norm(self)


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class Direction:
    """A pure quaternion ``x i + y j + z k`` used as a split direction.

    Directions are not required to be unit length (stain vectors and
    user-picked colors are used raw); :attr:`unit` reports whether the
    vector is normalized.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"direction component {name}={value!r} is not finite")
            object.__setattr__(self, name, value)

    @property
    def length(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    @property
    def unit(self) -> bool:
        return abs(self.length - 1.0) <= _UNIT_TOL

    @property
    def is_zero(self) -> bool:
        return self.x == 0.0 and self.y == 0.0 and self.z == 0.0

    def normalized(self) -> "Direction":
        n = self.length
        if n == 0.0:
            raise ZeroDirection("cannot normalize the zero direction")
        return Direction(self.x / n, self.y / n, self.z / n)

    def as_quaternion(self) -> Quaternion:
        return Quaternion(0.0, self.x, self.y, self.z)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def __neg__(self):
        return Direction(-self.x, -self.y, -self.z)

    @classmethod
    def from_rgb255(cls, r: int, g: int, b: int) -> "Direction":
        return cls(r / 255.0, g / 255.0, b / 255.0)


@dataclass(frozen=True)
class PolarForm:
    """``q = magnitude * (cos(angle) + axis * sin(angle))``.

    ``axis`` is None when the vector part vanishes (angle 0 or pi).
    """

    magnitude: float
    angle: float
    axis: Optional[Direction]

    @property
    def axis_defined(self) -> bool:
        return self.axis is not None

    def to_quaternion(self) -> Quaternion:
        c = self.magnitude * math.cos(self.angle)
        if self.axis is None:
            return Quaternion(c)
        s = self.magnitude * math.sin(self.angle)
        return Quaternion(c, s * self.axis.x, s * self.axis.y, s * self.axis.z)


def add(p: Quaternion, q: Quaternion) -> Quaternion:
    return Quaternion(p.w + q.w, p.x + q.x, p.y + q.y, p.z + q.z)


def sub(p: Quaternion, q: Quaternion) -> Quaternion:
    return Quaternion(p.w - q.w, p.x - q.x, p.y - q.y, p.z - q.z)


def scale(lam: float, q: Quaternion) -> Quaternion:
    lam = float(lam)
    if not math.isfinite(lam):
        raise ValueError("scale factor must be finite")
    return Quaternion(lam * q.w, lam * q.x, lam * q.y, lam * q.z)


def hamilton(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product ``p * q`` (non-commutative)."""
    a1, b1, c1, d1 = p.w, p.x, p.y, p.z
    a2, b2, c2, d2 = q.w, q.x, q.y, q.z
    return Quaternion(
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )


def conjugate(q: Quaternion) -> Quaternion:
    return Quaternion(q.w, -q.x, -q.y, -q.z)


def norm(q: Quaternion) -> float:
    return math.sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z)


def dot(p: Quaternion, q: Quaternion) -> float:
    return p.w * q.w + p.x * q.x + p.y * q.y + p.z * q.z


def inverse(q: Quaternion) -> Quaternion:
    n2 = dot(q, q)
    if n2 == 0.0:
        raise ZeroQuaternion("the zero quaternion has no inverse")
    return Quaternion(q.w / n2, -q.x / n2, -q.y / n2, -q.z / n2)


def right_divide(p: Quaternion, q: Quaternion) -> Quaternion:
    """``p * q^-1``."""
    return hamilton(p, inverse(q))


def _vector_norm(q: Quaternion) -> float:
    return math.sqrt(q.x * q.x + q.y * q.y + q.z * q.z)


def exp(q: Quaternion) -> Quaternion:
    ew = math.exp(q.w)
    vn = _vector_norm(q)
    if vn < _TINY:
        return Quaternion(ew)
    s = ew * math.sin(vn) / vn
    return Quaternion(ew * math.cos(vn), s * q.x, s * q.y, s * q.z)


def ln(q: Quaternion) -> Quaternion:
    """Principal natural logarithm.

    The rotation angle is taken as ``atan2(|v|, w)``, which equals
    ``arccos(w / |q|)`` but stays accurate near the real axis.
    """
    vn = _vector_norm(q)
    qn = math.hypot(q.w, vn)
    if qn == 0.0:
        raise ZeroQuaternion("ln(0) is undefined")
    if vn < _TINY:
        if q.w < 0.0:
            raise UndefinedLog("ln of a negative real quaternion has no principal axis")
        return Quaternion(math.log(q.w))
    c = math.atan2(vn, q.w) / vn
    return Quaternion(math.log(qn), c * q.x, c * q.y, c * q.z)


def polar(q: Quaternion) -> PolarForm:
    vn = _vector_norm(q)
    qn = math.hypot(q.w, vn)
    if qn == 0.0:
        raise ZeroQuaternion("the zero quaternion has no polar form")
    angle = math.atan2(vn, q.w)
    if vn < _TINY:
        return PolarForm(qn, angle, None)
    return PolarForm(qn, angle, Direction(q.x / vn, q.y / vn, q.z / vn))


def pow(q: Quaternion, n: float) -> Quaternion:  # noqa: A001 - mirrors the algebra's name
    """``q ** n`` through the principal polar form (angle in [0, pi])."""
    n = float(n)
    qn = norm(q)
    if qn == 0.0:
        if n <= 0.0:
            raise ZeroQuaternion("0 ** n is undefined for n <= 0")
        return Quaternion()
    form = polar(q)
    if form.axis is None:
        if q.w > 0.0:
            return Quaternion(q.w ** n)
        if n.is_integer():
            return Quaternion(q.w ** int(n))
        raise UndefinedLog("fractional power of a negative real has no principal value")
    rn = qn ** n
    c = rn * math.cos(n * form.angle)
    s = rn * math.sin(n * form.angle)
    return Quaternion(c, s * form.axis.x, s * form.axis.y, s * form.axis.z)

