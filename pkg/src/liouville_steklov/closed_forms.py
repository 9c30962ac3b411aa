"""Explicit bubbles of the 1D singular Liouville equation and their extensions.

Everything here is a closed formula; functions accept scalars or numpy arrays
and broadcast.  The singular family is indexed by ``BubbleParams(alpha, rho)``
and the regular (alpha = 1) family by ``RegularBubbleParams(mu, xi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AlphaOutOfRange, InvalidParameter

__all__ = [
    "BubbleParams",
    "RegularBubbleParams",
    "HalfPlanePoint",
    "validate_alpha",
    "bubble_value",
    "z_rho_value",
    "z_xi_value",
    "extension_value",
    "dU_drho_value",
    "asymptotic_constant",
    "asymptotic_limit",
]


def validate_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha <= 0.0 or alpha >= 2.0:
        raise AlphaOutOfRange(
            f"alpha={alpha!r}: singular bubbles exist only for alpha in (0,1)U(1,2); "
            "for alpha >= 2 the equation has no solution"
        )
    if alpha == 1.0:
        raise AlphaOutOfRange(
            "alpha=1 is the regular (translation invariant) case; "
            "use RegularBubbleParams(mu, xi) for that family"
        )
    return alpha


@dataclass(frozen=True)
class BubbleParams:
    alpha: float
    rho: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", validate_alpha(self.alpha))
        rho = float(self.rho)
        if not (math.isfinite(rho) and rho > 0.0):
            raise InvalidParameter(f"rho must be positive, got {self.rho!r}")
        object.__setattr__(self, "rho", rho)

    @property
    def regime(self) -> str:
        """'intersection' for alpha < 1, 'union' for alpha > 1."""
        return "intersection" if self.alpha < 1.0 else "union"

    def with_rho(self, rho: float) -> "BubbleParams":
        return BubbleParams(self.alpha, rho)


@dataclass(frozen=True)
class RegularBubbleParams:
    """The alpha = 1 family ln(2 mu / ((x - xi)^2 + mu^2))."""

    mu: float = 1.0
    xi: float = 0.0

    def __post_init__(self):
        mu = float(self.mu)
        if not (math.isfinite(mu) and mu > 0.0):
            raise InvalidParameter(f"mu must be positive, got {self.mu!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "xi", float(self.xi))

    alpha = 1.0

    @property
    def rho(self) -> float:
        return self.mu


@dataclass(frozen=True)
class HalfPlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if self.y < 0.0:
            raise InvalidParameter(f"point must lie in the closed upper half-plane, y={self.y}")

    @property
    def theta(self) -> float:
        return math.atan2(self.y, self.x)


def _xy(q):
    if isinstance(q, HalfPlanePoint):
        return q.x, q.y
    q = np.asarray(q, dtype=float)
    return q[..., 0], q[..., 1]


def _boundary_denominator(p: BubbleParams, x):
    # |x|^{2a} + 2 rho |x|^a cos(pi a/2) + rho^2, as a sum of squares
    h = 0.5 * math.pi * p.alpha
    s = np.abs(x) ** p.alpha
    return (s + p.rho * math.cos(h)) ** 2 + (p.rho * math.sin(h)) ** 2


def bubble_value(p, x):
    """u_rho(x) (or the regular bubble when ``p`` is RegularBubbleParams)."""
    x = np.asarray(x, dtype=float)
    if isinstance(p, RegularBubbleParams):
        out = np.log(2.0 * p.mu) - np.log((x - p.xi) ** 2 + p.mu**2)
    else:
        c = 2.0 * p.alpha * p.rho * math.sin(0.5 * math.pi * p.alpha)
        out = math.log(c) - np.log(_boundary_denominator(p, x))
    return out[()] if out.ndim == 0 else out


def z_rho_value(p, x):
    """d u_rho / d rho; for the regular family this is z_0 = d/d mu."""
    x = np.asarray(x, dtype=float)
    if isinstance(p, RegularBubbleParams):
        d2 = (x - p.xi) ** 2
        out = (d2 - p.mu**2) / (p.mu * (d2 + p.mu**2))
    else:
        s = np.abs(x) ** p.alpha
        out = (s - p.rho) * (s + p.rho) / (p.rho * _boundary_denominator(p, x))
    return out[()] if out.ndim == 0 else out


def z_xi_value(p: RegularBubbleParams, x):
    """Translation kernel z_1 = d/d xi of the regular bubble."""
    x = np.asarray(x, dtype=float)
    d = x - p.xi
    out = 2.0 * d / (p.mu**2 + d**2)
    return out[()] if out.ndim == 0 else out


def _extension_denominator(p: BubbleParams, x, y):
    # |z^a - z0|^2 with z0 = rho e^{i(pi a/2 + pi)}, z^a on the branch theta in [0, pi]
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    ra = r**p.alpha
    h = 0.5 * math.pi * p.alpha
    re = ra * np.cos(p.alpha * th) + p.rho * math.cos(h)
    im = ra * np.sin(p.alpha * th) + p.rho * math.sin(h)
    return re * re + im * im, ra


def extension_value(p, q):
    """Harmonic extension U_rho(x, y) of the bubble to the upper half-plane."""
    x, y = _xy(q)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(p, RegularBubbleParams):
        out = np.log(2.0 * p.mu) - np.log((x - p.xi) ** 2 + (y + p.mu) ** 2)
    else:
        den, _ = _extension_denominator(p, x, y)
        c = 2.0 * p.alpha * p.rho * math.sin(0.5 * math.pi * p.alpha)
        out = math.log(c) - np.log(den)
    return out[()] if np.ndim(out) == 0 else out


def dU_drho_value(p, q):
    """(1/rho) (|z|^{2a} - rho^2) / |z^a - z0|^2."""
    x, y = _xy(q)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(p, RegularBubbleParams):
        r2 = (x - p.xi) ** 2 + y**2
        out = (r2 - p.mu**2) / (p.mu * ((x - p.xi) ** 2 + (y + p.mu) ** 2))
    else:
        den, ra = _extension_denominator(p, x, y)
        out = (ra - p.rho) * (ra + p.rho) / (p.rho * den)
    return out[()] if np.ndim(out) == 0 else out


def asymptotic_limit(p) -> float:
    """lim_{|x|->inf} u(x) + 2 alpha ln|x| = ln(2 alpha rho sin(pi alpha / 2))."""
    if isinstance(p, RegularBubbleParams):
        return math.log(2.0 * p.mu)
    return math.log(2.0 * p.alpha * p.rho * math.sin(0.5 * math.pi * p.alpha))


def asymptotic_constant(p, x):
    """u(x) + 2 alpha ln|x|: the deviation from pure logarithmic decay."""
    x = np.asarray(x, dtype=float)
    out = bubble_value(p, x) + 2.0 * p.alpha * np.log(np.abs(x))
    return out[()] if np.ndim(out) == 0 else out
