"""Exception types raised across the package."""


class LiouvilleSteklovError(Exception):
    """Base class for all package errors."""


class InvalidParameter(LiouvilleSteklovError, ValueError):
    pass


class AlphaOutOfRange(InvalidParameter):
    pass


class OriginUndefined(LiouvilleSteklovError, ValueError):
    pass


class PoleAtXi(LiouvilleSteklovError, ZeroDivisionError):
    pass


class DegenerateDomain(InvalidParameter):
    pass


class TooCloseToBoundary(LiouvilleSteklovError, ValueError):
    pass


class TailModelMissing(LiouvilleSteklovError):
    pass


class QuadratureNotConverged(LiouvilleSteklovError):
    pass


class NotConverged(LiouvilleSteklovError):
    pass
