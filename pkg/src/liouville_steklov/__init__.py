"""Singular Liouville bubbles on the line, their conformal reduction to a
Steklov problem on two-disk domains, and numerical certificates."""

__version__ = "0.1.0"

from .closed_forms import BubbleParams, HalfPlanePoint, RegularBubbleParams  # noqa: E402
from .errors import (  # noqa: E402
    AlphaOutOfRange,
    DegenerateDomain,
    InvalidParameter,
    LiouvilleSteklovError,
    NotConverged,
    OriginUndefined,
    PoleAtXi,
    QuadratureNotConverged,
    TailModelMissing,
    TooCloseToBoundary,
)
from .geometry import ConformalContext, DiskPairDomain, normalized_domain, unit_disk  # noqa: E402
