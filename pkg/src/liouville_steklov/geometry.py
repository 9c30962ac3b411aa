"""Conformal changes of variables and the two-disk domains they produce.

The chain is: upper half-plane --F (z -> z^alpha)--> cone of opening pi*alpha
--G (Mobius)--> intersection (alpha < 1) or union (alpha > 1) of two disks.
After a homothety by mu_alpha = sin(pi alpha / 2) the disks become unit disks
centred at (0, +-ell) with ell = |cos(pi alpha / 2)|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import closed_forms
from .closed_forms import BubbleParams, validate_alpha
from .errors import DegenerateDomain, InvalidParameter, OriginUndefined, PoleAtXi

DOMAIN_SCHEMA_VERSION = 1

__all__ = [
    "ConformalContext",
    "Arc",
    "DiskPairDomain",
    "power_map",
    "power_map_inv",
    "mobius_map",
    "mobius_map_complex",
    "mobius_jacobian",
    "cone_weight",
    "normalized_domain",
    "unit_disk",
    "disk_pair",
    "perimeter",
    "arc_length_numeric",
    "upper_arc_length_numeric",
    "pullback_eigenfunction",
    "in_cone",
    "image_circles",
    "tau_alpha",
]


def tau_alpha(alpha: float) -> float:
    alpha = validate_alpha(alpha)
    return (1.0 + math.cos(alpha * math.pi)) / math.sin(alpha * math.pi)


@dataclass(frozen=True)
class ConformalContext:
    """Anchor point xi and the constants of the maps F_alpha, G_alpha."""

    alpha: float
    rho: float = 1.0
    tau: float = field(init=False)
    theta0: float = field(init=False)
    xi: tuple = field(init=False)
    mu_alpha: float = field(init=False)

    def __post_init__(self):
        alpha = validate_alpha(self.alpha)
        if not (self.rho > 0.0 and math.isfinite(self.rho)):
            raise InvalidParameter(f"rho must be positive, got {self.rho!r}")
        theta0 = 0.5 * math.pi * alpha + math.pi
        tau = tau_alpha(alpha)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "theta0", theta0)
        # polar form keeps xi2 < 0 exactly: xi = -rho (cos, sin)(pi alpha / 2)
        h = 0.5 * math.pi * alpha
        object.__setattr__(self, "xi", (-self.rho * math.cos(h), -self.rho * math.sin(h)))
        object.__setattr__(self, "mu_alpha", 1.0 / math.sqrt(1.0 + tau * tau))

    @property
    def bubble(self) -> BubbleParams:
        return BubbleParams(self.alpha, self.rho)

    @property
    def xi_complex(self) -> complex:
        return complex(*self.xi)

    @property
    def image_radius(self) -> float:
        """Radius |xi| / |xi_2| of both image circles."""
        return math.hypot(*self.xi) / abs(self.xi[1])


def _split(q):
    q = np.asarray(q, dtype=float)
    return q[..., 0], q[..., 1]


def _pack(a, b):
    out = np.stack(np.broadcast_arrays(a, b), axis=-1)
    return out


def power_map(alpha: float, q):
    """F_alpha(x, y) = (r^a cos(a theta), r^a sin(a theta)), theta in [0, pi]."""
    x, y = _split(q)
    if np.any(y < 0):
        raise InvalidParameter("power_map is defined on the closed upper half-plane")
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    ra = r**alpha
    return _pack(ra * np.cos(alpha * th), ra * np.sin(alpha * th))


def power_map_inv(alpha: float, p):
    """Inverse of power_map on the closed cone {0 <= arg <= pi*alpha}."""
    s, t = _split(p)
    R = np.hypot(s, t)
    if np.any(R == 0.0):
        raise OriginUndefined("the inverse power map is not defined at the cone vertex")
    ang = np.mod(np.arctan2(t, s), 2.0 * math.pi)
    # points just below the positive axis belong to theta = 0
    ang = np.where(ang > math.pi * alpha + 0.5 * (2.0 * math.pi - math.pi * alpha), ang - 2.0 * math.pi, ang)
    r = R ** (1.0 / alpha)
    th = ang / alpha
    return _pack(r * np.cos(th), r * np.sin(th))


def in_cone(alpha: float, p) -> np.ndarray:
    s, t = _split(p)
    ang = np.mod(np.arctan2(t, s), 2.0 * math.pi)
    return (np.hypot(s, t) > 0) & (ang < math.pi * alpha)


def _check_pole(ctx: ConformalContext, d2):
    if np.any(d2 == 0.0):
        raise PoleAtXi(f"point coincides with the pole xi={ctx.xi}")


def mobius_map(ctx: ConformalContext, q):
    """G_alpha in real form."""
    x, y = _split(q)
    x1, x2 = ctx.xi
    d2 = (x - x1) ** 2 + (y - x2) ** 2
    _check_pole(ctx, d2)
    xi2 = x1 * x1 + x2 * x2
    return _pack((xi2 - x * x - y * y) / d2, 2.0 * (y * x1 - x * x2) / d2)


def mobius_map_complex(ctx: ConformalContext, q):
    """G_alpha as g(z) = -(z + xi) / (z - xi)."""
    x, y = _split(q)
    z = x + 1j * y
    xi = ctx.xi_complex
    if np.any(z == xi):
        raise PoleAtXi(f"point coincides with the pole xi={ctx.xi}")
    w = -(z + xi) / (z - xi)
    return _pack(w.real, w.imag)


def mobius_jacobian(ctx: ConformalContext, q):
    """det DG_alpha = 4 |xi|^2 / |z - xi|^4."""
    x, y = _split(q)
    x1, x2 = ctx.xi
    d2 = (x - x1) ** 2 + (y - x2) ** 2
    _check_pole(ctx, d2)
    out = 4.0 * (x1 * x1 + x2 * x2) / (d2 * d2)
    return out[()] if np.ndim(out) == 0 else out


def cone_weight(ctx: ConformalContext, q):
    """W_alpha(x, y) = ln(2 |xi_2| / |q - xi|^2)."""
    x, y = _split(q)
    x1, x2 = ctx.xi
    d2 = (x - x1) ** 2 + (y - x2) ** 2
    _check_pole(ctx, d2)
    out = np.log(2.0 * abs(x2)) - np.log(d2)
    return out[()] if np.ndim(out) == 0 else out


def image_circles(ctx: ConformalContext):
    """Centres and common radius of G(boundary of the upper half-plane) and
    G(the other boundary line of the cone).

    Returns ((0, -tau), (0, +tau), radius): the real axis goes to the first
    circle, the ray at angle pi*alpha to the second.
    """
    r = ctx.image_radius
    return (0.0, -ctx.tau), (0.0, ctx.tau), r


def pullback_eigenfunction(ctx: ConformalContext, q):
    """First coordinate of G_alpha(F_alpha(q)), i.e. the eigenfunction x pulled
    back to the half-plane."""
    w = mobius_map(ctx, power_map(ctx.alpha, q))
    out = w[..., 0]
    return out[()] if np.ndim(out) == 0 else out


def pullback_closed_form(ctx: ConformalContext, q):
    """(|xi|^2 - (x^2 + y^2)^alpha) / |z^alpha - xi|^2, written out directly."""
    x, y = _split(q)
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    ra = r**ctx.alpha
    x1, x2 = ctx.xi
    den = (ra * np.cos(ctx.alpha * th) - x1) ** 2 + (ra * np.sin(ctx.alpha * th) - x2) ** 2
    out = (ctx.rho - ra) * (ctx.rho + ra) / den
    return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Arc:
    """Counterclockwise circular arc, angles in radians about ``center``."""

    center: tuple
    radius: float
    angle_from: float
    angle_to: float

    @property
    def length(self) -> float:
        return self.radius * (self.angle_to - self.angle_from)

    def point(self, phi):
        phi = np.asarray(phi, dtype=float)
        return _pack(
            self.center[0] + self.radius * np.cos(phi), self.center[1] + self.radius * np.sin(phi)
        )

    def to_json(self) -> dict:
        return {
            "center": [float(self.center[0]), float(self.center[1])],
            "radius": float(self.radius),
            "angle_from": float(self.angle_from),
            "angle_to": float(self.angle_to),
        }


ELL_MIN = 0.02
ELL_MAX = 0.98
MODES = ("intersection", "union", "disk")


@dataclass(frozen=True)
class DiskPairDomain:
    """Intersection or union of the disks x^2 + (y -+ ell)^2 < scale^2 (scaled by ``scale``).

    ``mode='disk'`` is the ell = 0 limit, a single disk of radius ``scale``.
    """

    ell: float
    mode: str
    scale: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidParameter(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.scale > 0:
            raise InvalidParameter("scale must be positive")
        if self.mode == "disk":
            if self.ell != 0.0:
                raise InvalidParameter("the disk domain has ell = 0")
        elif not 0.0 < self.ell < 1.0:
            raise InvalidParameter(f"ell must lie in (0, 1), got {self.ell!r}")
        object.__setattr__(self, "ell", float(self.ell))

    @property
    def corners(self) -> tuple:
        if self.mode == "disk":
            return ()
        c = self.scale * math.sqrt(1.0 - self.ell**2)
        return ((c, 0.0), (-c, 0.0))

    @property
    def arcs(self) -> tuple:
        s, ell = self.scale, self.ell
        if self.mode == "disk":
            return (Arc((0.0, 0.0), s, 0.0, 2.0 * math.pi),)
        a = math.asin(ell)
        if self.mode == "intersection":
            # upper arc belongs to the circle centred (0, -ell), lower to (0, +ell)
            return (
                Arc((0.0, -s * ell), s, a, math.pi - a),
                Arc((0.0, s * ell), s, math.pi + a, 2.0 * math.pi - a),
            )
        return (
            Arc((0.0, s * ell), s, -a, math.pi + a),
            Arc((0.0, -s * ell), s, math.pi - a, 2.0 * math.pi + a),
        )

    @property
    def interior_angle(self) -> float:
        """Interior angle at each corner (pi for the disk)."""
        if self.mode == "disk":
            return math.pi
        a = 2.0 * math.asin(self.ell)
        return math.pi - a if self.mode == "intersection" else math.pi + a

    def contains(self, p, band: float = 0.0):
        """Membership (open set shrunk by ``band``); vectorised over points."""
        x, y = _split(p)
        s, ell = self.scale, self.ell
        d_plus = np.hypot(x, y - s * ell) - s
        d_minus = np.hypot(x, y + s * ell) - s
        if self.mode == "disk":
            d = d_plus
        elif self.mode == "intersection":
            d = np.maximum(d_plus, d_minus)
        else:
            d = np.minimum(d_plus, d_minus)
        return d < -band

    def signed_distance_estimate(self, p):
        x, y = _split(p)
        s, ell = self.scale, self.ell
        d_plus = np.hypot(x, y - s * ell) - s
        d_minus = np.hypot(x, y + s * ell) - s
        if self.mode == "disk":
            return d_plus
        if self.mode == "intersection":
            return np.maximum(d_plus, d_minus)
        return np.minimum(d_plus, d_minus)

    def scaled(self, c: float) -> "DiskPairDomain":
        return DiskPairDomain(self.ell, self.mode, self.scale * c)

    def to_json(self) -> dict:
        return {
            "version": DOMAIN_SCHEMA_VERSION,
            "mode": self.mode,
            "ell": self.ell,
            "scale": self.scale,
            "corners": [list(c) for c in self.corners],
            "arcs": [a.to_json() for a in self.arcs],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DiskPairDomain":
        if doc.get("version") != DOMAIN_SCHEMA_VERSION:
            raise InvalidParameter(f"unsupported domain document version {doc.get('version')!r}")
        return cls(float(doc["ell"]), doc["mode"], float(doc.get("scale", 1.0)))


def unit_disk() -> DiskPairDomain:
    return DiskPairDomain(0.0, "disk")


def disk_pair(ell: float, mode: str, *, check_range: bool = False) -> DiskPairDomain:
    if check_range and not (ELL_MIN <= ell <= ELL_MAX):
        raise DegenerateDomain(f"ell={ell} outside the supported range [{ELL_MIN}, {ELL_MAX}]")
    return DiskPairDomain(ell, mode)


def normalized_domain(alpha: float) -> DiskPairDomain:
    """Unit-disk pair homothetic to G_alpha(cone): ell = |cos(pi alpha/2)|."""
    alpha = validate_alpha(alpha)
    tau = tau_alpha(alpha)
    ell = abs(tau) / math.sqrt(1.0 + tau * tau)
    return DiskPairDomain(ell, "intersection" if alpha < 1.0 else "union")


def perimeter(d: DiskPairDomain) -> float:
    if d.mode == "disk":
        return 2.0 * math.pi * d.scale
    a = math.asin(d.ell)
    if d.mode == "intersection":
        return d.scale * 2.0 * (math.pi - 2.0 * a)
    return d.scale * (2.0 * math.pi + 4.0 * a)


def _side_length(s: float, xc: float) -> float:
    """int_xc^s s / sqrt(s^2 - x^2) dx with the endpoint singularity taken by
    an algebraic quadrature weight (s - x)^(-1/2)."""
    from scipy.integrate import quad

    val, _ = quad(lambda x: s / math.sqrt(s + x), xc, s, weight="alg", wvar=(0.0, -0.5), epsabs=1e-15, epsrel=1e-14)
    return val


def arc_length_numeric(d: DiskPairDomain) -> float:
    """Perimeter from numerically integrating |gamma'| over a Cartesian
    parameterisation of each circle (independent of the angle bookkeeping)."""
    s, ell = d.scale, d.ell
    if d.mode == "disk":
        # y = +-sqrt(s^2 - x^2); |gamma'| = s / sqrt(s^2 - x^2)
        return 4.0 * _side_length(s, 0.0)
    xc = s * math.sqrt(1.0 - ell * ell)
    # each arc is split into graphs over x; the speed of x -> (x, c +- sqrt(s^2-x^2))
    side = _side_length(s, xc)
    inner = 2.0 * (_side_length(s, 0.0) - side)
    if d.mode == "intersection":
        return 2.0 * inner
    # near arc (|x| < xc) is the part outside the other disk; plus the two
    # side pieces over |x| in (xc, s) on both upper and lower branches
    return 2.0 * (inner + 4.0 * side)


def upper_arc_length_numeric(d: DiskPairDomain) -> float:
    """Length of the part of the boundary lying in y > 0, by the same
    Cartesian-graph integration as ``arc_length_numeric``."""
    s, ell = d.scale, d.ell
    if d.mode == "disk":
        return 2.0 * _side_length(s, 0.0)
    xc = s * math.sqrt(1.0 - ell * ell)
    side = _side_length(s, xc)
    inner = 2.0 * (_side_length(s, 0.0) - side)
    if d.mode == "intersection":
        return inner
    return inner + 4.0 * side
