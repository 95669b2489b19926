"""Exception types raised across the package."""


class QopsError(Exception):
    """Base class for all package errors."""


class ZeroQuaternion(QopsError, ZeroDivisionError):
    """Operation undefined for the zero quaternion."""


class UndefinedLog(QopsError, ValueError):
    """Logarithm (or fractional power) of a negative real quaternion."""


class IndexOutOfRange(QopsError, IndexError):
    pass


class ZeroDirection(QopsError, ValueError):
    """A split direction with zero length."""


class DegenerateRange(QopsError, ValueError):
    pass


class UnsupportedRaster(QopsError, ValueError):
    """Raster layout the I/O layer does not handle (alpha, 16-bit, ...)."""


class DimensionMismatch(QopsError, ValueError):
    pass


class ZeroEncoding(QopsError, ValueError):
    """All de-colorization encoding values vanished."""


class BadChannelSelection(QopsError, ValueError):
    pass


class DegenerateStains(QopsError, ValueError):
    """Optical density cloud does not span two stain directions."""


class ImageTooSmall(QopsError, ValueError):
    pass


class ConfigError(QopsError, ValueError):
    pass
