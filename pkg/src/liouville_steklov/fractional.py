"""Half-Laplacian on the line and the Poisson extension to the half-plane.

The half-Laplacian is evaluated as the principal-value integral

    (1/pi) p.v. int (u(x) - u(t)) / (x - t)^2 dt.

Near x the two sides are paired, (2u(x) - u(x+s) - u(x-s)) / s^2, which is
the Taylor-subtracted integrand with the odd term cancelled; away from x a
composite Gauss-Legendre rule on panels graded toward t = 0 (where the
singular bubbles have a |t|^alpha kink) and log-spaced toward the cutoff; past
the cutoff the declared tail u ~ -beta ln|t| + c is integrated in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from .closed_forms import (
    BubbleParams,
    HalfPlanePoint,
    RegularBubbleParams,
    asymptotic_limit,
    bubble_value,
    z_rho_value,
)
from .errors import InvalidParameter, QuadratureNotConverged, TailModelMissing

__all__ = [
    "SampledFunction",
    "QuadratureSpec",
    "half_laplacian",
    "near_field_integral",
    "poisson_extend",
    "verify_bubble_residual",
    "verify_linearized_residual",
    "bubble_function",
    "kernel_function",
    "BUBBLE_GRID",
    "KERNEL_GRID",
    "REGULAR_GRID",
]

BUBBLE_GRID = (-4.0, -1.0, -0.25, 0.25, 1.0, 4.0)
KERNEL_GRID = (-3.0, -1.0, -0.5, 0.5, 1.0, 3.0)
REGULAR_GRID = (-2.0, -1.0, 0.0, 1.0, 2.0)

_MAX_LEVELS = 7
_INNER_EXP = -12  # graded panels reach |t| = 10^-12


@lru_cache(maxsize=None)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class SampledFunction:
    """A real function on the line with an optional logarithmic tail.

    ``tail_model = (beta, c)`` asserts u(t) ~ -beta ln|t| + c for |t| > cutoff,
    with pointwise deviation at most ``tail_tol`` there.
    """

    evaluator: Callable
    tail_model: Optional[Tuple[float, float]] = None
    cutoff: float = 1e6
    tail_tol: float = 1e-3

    def __post_init__(self):
        if not (self.cutoff > 0 and math.isfinite(self.cutoff)):
            raise InvalidParameter("cutoff must be positive")
        if self.tail_model is not None:
            beta, c = self.tail_model
            at = np.array([-self.cutoff, self.cutoff])
            dev = np.abs(self(at) - (c - beta * math.log(self.cutoff)))
            if not np.all(dev <= self.tail_tol):
                raise InvalidParameter(
                    f"tail model misses u at |t|=cutoff by {dev.max():.3e} > tail_tol={self.tail_tol:.1e}"
                )

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        try:
            out = np.asarray(self.evaluator(t), dtype=float)
            if out.shape != t.shape:
                out = np.broadcast_to(out, t.shape).astype(float)
        except (TypeError, ValueError):
            out = np.vectorize(lambda s: float(self.evaluator(float(s))))(t)
        return out


@dataclass(frozen=True)
class QuadratureSpec:
    near_field_halfwidth: float = 0.5
    panel_order: int = 8
    truncation_radius: float = 1e8
    target_tol: float = 1e-8
    near_field_panels: int = 4

    def __post_init__(self):
        if int(self.panel_order) != self.panel_order or self.panel_order < 4:
            raise InvalidParameter("panel_order must be an integer >= 4")
        if not (0.0 < self.near_field_halfwidth < self.truncation_radius):
            raise InvalidParameter("need truncation_radius > near_field_halfwidth > 0")
        if not self.target_tol > 0:
            raise InvalidParameter("target_tol must be positive")
        if int(self.near_field_panels) != self.near_field_panels or self.near_field_panels < 1:
            raise InvalidParameter("near_field_panels must be a positive integer")


def bubble_function(p, cutoff: float = 1e6) -> SampledFunction:
    """u_rho with its tail -2 alpha ln|t| + ln(2 alpha rho sin(pi alpha/2))."""
    model = (2.0 * p.alpha, asymptotic_limit(p))
    return _with_measured_tail(lambda t: bubble_value(p, t), model, cutoff)


def kernel_function(p, cutoff: float = 1e6) -> SampledFunction:
    """z_rho = du/drho, which tends to 1/rho at infinity."""
    return _with_measured_tail(lambda t: z_rho_value(p, t), (0.0, 1.0 / p.rho), cutoff)


def _with_measured_tail(f, model, cutoff):
    beta, c = model
    at = np.array([-cutoff, cutoff])
    dev = float(np.max(np.abs(f(at) - (c - beta * math.log(cutoff)))))
    return SampledFunction(f, model, cutoff, max(2.0 * dev, 1e-14))


def near_field_integral(u: SampledFunction, x: float, a: float, panels: int, order: int) -> float:
    """int_0^a (2u(x) - u(x+s) - u(x-s)) / s^2 ds by composite Gauss-Legendre."""
    t, w = _gauss(order)
    edges = np.linspace(0.0, a, panels + 1)
    h = 0.5 * np.diff(edges)
    s = (0.5 * (edges[:-1] + edges[1:]))[:, None] + h[:, None] * t
    ws = h[:, None] * w
    ux = float(u(np.array(x)))
    f = (2.0 * ux - u(x + s) - u(x - s)) / (s * s)
    return float(np.sum(ws * f))


def _breakpoints(T: float, per_decade: int) -> np.ndarray:
    n = int(math.ceil((math.log10(T) - _INNER_EXP) * per_decade))
    pos = np.logspace(_INNER_EXP, math.log10(T), n + 1)
    return np.concatenate([-pos[::-1], [0.0], pos])


def _panel_rule(edges: np.ndarray, order: int):
    t, w = _gauss(order)
    h = 0.5 * np.diff(edges)
    nodes = (0.5 * (edges[:-1] + edges[1:]))[:, None] + h[:, None] * t
    return nodes.ravel(), (h[:, None] * w).ravel()


def _far_edges(x: float, a: float, T: float, per_decade: int, extra=()) -> list:
    """Panel edges covering [-T, x-a] and [x+a, T]."""
    br = np.concatenate([_breakpoints(T, per_decade), np.asarray(extra, dtype=float)])
    br = np.unique(np.clip(br, -T, T))
    left = br[br < x - a]
    right = br[br > x + a]
    out = []
    if x - a > -T:
        out.append(np.append(left, x - a))
    if x + a < T:
        out.append(np.insert(right, 0, x + a))
    return [e for e in out if len(e) > 1]


def _log_tail(x: float, T: float) -> float:
    """int_T^inf ln t / (t - x)^2 dt for |x| < T."""
    if x == 0.0:
        return (math.log(T) + 1.0) / T
    return math.log(T) / (T - x) - math.log1p(-x / T) / x


def _tail_bound(u: SampledFunction, x: float, T: float) -> float:
    # |u - model| <= tail_tol past the cutoff, and int_{|t|>T} dt/(x-t)^2
    return u.tail_tol * (1.0 / (T - x) + 1.0 / (T + x)) / math.pi


def _half_laplacian_level(u, x, q, a, T, level):
    m = q.near_field_panels * 2**level
    near = near_field_integral(u, x, a, m, q.panel_order)
    # far panels: same relative size near x as the near-field panels
    step = a / m
    extra = np.concatenate([x - a - step * np.arange(1, 2 * m + 1), x + a + step * np.arange(1, 2 * m + 1)])
    far = 0.0
    ux = float(u(np.array(x)))
    for edges in _far_edges(x, a, T, 4 * 2**level, extra):
        t, w = _panel_rule(edges, q.panel_order)
        far += float(np.sum(w * (ux - u(t)) / (x - t) ** 2))
    beta, c = u.tail_model
    mass = 1.0 / (T - x) + 1.0 / (T + x)
    tail = (ux - c) * mass + beta * (_log_tail(x, T) + _log_tail(-x, T))
    return (near + far + tail) / math.pi


def half_laplacian(u: SampledFunction, x: float, q: QuadratureSpec = QuadratureSpec()) -> float:
    """(-Delta)^{1/2} u at x, refined until two levels agree to q.target_tol."""
    x = float(x)
    T = float(q.truncation_radius)
    if u.tail_model is None:
        raise TailModelMissing("a tail model (beta, c) is needed to bound the truncation error")
    if T < u.cutoff or abs(x) >= 0.5 * T:
        raise TailModelMissing(f"truncation_radius={T:g} is inside the tail cutoff {u.cutoff:g} or too close to x")
    if _tail_bound(u, x, T) > q.target_tol:
        raise TailModelMissing(
            f"tail deviation {u.tail_tol:.1e} at radius {T:g} cannot meet target_tol={q.target_tol:.1e}"
        )
    a = q.near_field_halfwidth if x == 0.0 else min(q.near_field_halfwidth, 0.5 * abs(x))
    prev = _half_laplacian_level(u, x, q, a, T, 0)
    for level in range(1, _MAX_LEVELS + 1):
        cur = _half_laplacian_level(u, x, q, a, T, level)
        change = abs(cur - prev)
        if change <= q.target_tol:
            return cur
        prev = cur
    raise QuadratureNotConverged(f"half-Laplacian at x={x}: last refinement changed the value by {change:.3e}")


def _poisson_level(g, x, y, T, order, level):
    extra = x + np.concatenate([-(y * np.logspace(-3, 3, 13)), [0.0], y * np.logspace(-3, 3, 13)])
    edges = _far_edges(0.0, 0.0, T, 4 * 2**level, extra)
    # _far_edges with a = 0 splits at 0; merge into one sweep
    total = 0.0
    for e in edges:
        e = np.unique(e)
        if level:
            mid = 0.5 * (e[:-1] + e[1:])
            e = np.sort(np.concatenate([e, mid]))
        t, w = _panel_rule(e, order)
        total += float(np.sum(w * y * g(t) / ((x - t) ** 2 + y * y)))
    return total / math.pi


def poisson_extend(u: SampledFunction, q2, q: QuadratureSpec = QuadratureSpec()) -> float:
    """(1/pi) int y u(t) / ((x-t)^2 + y^2) dt at the point q2 = (x, y), y > 0.

    With the tail (beta, c) this is computed as
    (1/pi) int_{|t|<T} P (u + beta ln|t| - c) + c - beta ln sqrt(x^2 + y^2),
    using that the kernel has unit mass and reproduces ln|t|.
    """
    x, y = (q2.x, q2.y) if isinstance(q2, HalfPlanePoint) else map(float, q2)
    if not y > 0:
        raise InvalidParameter("poisson_extend needs y > 0")
    if u.tail_model is None:
        raise TailModelMissing("a tail model (beta, c) is needed to bound the truncation error")
    beta, c = u.tail_model
    T = float(q.truncation_radius)
    if T < u.cutoff or abs(x) >= 0.5 * T:
        raise TailModelMissing(f"truncation_radius={T:g} is inside the tail cutoff {u.cutoff:g} or too close to x")

    def g(t):
        with np.errstate(divide="ignore"):
            lt = np.log(np.abs(t))
        return u(t) + beta * lt - c if beta else u(t) - c

    if u.tail_tol * 2.0 * y / (math.pi * (T - abs(x))) > q.target_tol:
        raise TailModelMissing(f"tail deviation {u.tail_tol:.1e} cannot meet target_tol={q.target_tol:.1e}")
    base = c - beta * math.log(math.hypot(x, y))
    prev = _poisson_level(g, x, y, T, q.panel_order, 0)
    for level in range(1, _MAX_LEVELS + 1):
        cur = _poisson_level(g, x, y, T, q.panel_order, level)
        change = abs(cur - prev)
        if change <= q.target_tol:
            return cur + base
        prev = cur
    raise QuadratureNotConverged(f"Poisson extension at ({x}, {y}) changed by {change:.3e} on refinement")


def _weight(p, x):
    return np.abs(x) ** (p.alpha - 1.0) if p.alpha != 1.0 else np.ones_like(x)


def _check_grid(p, grid):
    grid = np.asarray(grid, dtype=float)
    if p.alpha < 1.0 and np.any(grid == 0.0):
        raise InvalidParameter("grid must avoid x = 0 when alpha < 1")
    return grid


def _default_spec(p) -> QuadratureSpec:
    return QuadratureSpec(target_tol=1e-8 if isinstance(p, RegularBubbleParams) else 1e-6)


def verify_bubble_residual(p, grid=None, q: QuadratureSpec = None) -> float:
    """max_x |(-Delta)^{1/2} u(x) - |x|^{alpha-1} e^{u(x)}| over the grid."""
    grid = _check_grid(p, REGULAR_GRID if grid is None and isinstance(p, RegularBubbleParams) else (BUBBLE_GRID if grid is None else grid))
    q = _default_spec(p) if q is None else q
    u = bubble_function(p)
    lhs = np.array([half_laplacian(u, x, q) for x in grid])
    rhs = _weight(p, grid) * np.exp(bubble_value(p, grid))
    return float(np.max(np.abs(lhs - rhs)))


def verify_linearized_residual(p, grid=None, q: QuadratureSpec = None) -> float:
    """max_x |(-Delta)^{1/2} z(x) - |x|^{alpha-1} e^{u(x)} z(x)| over the grid."""
    grid = _check_grid(p, REGULAR_GRID if grid is None and isinstance(p, RegularBubbleParams) else (KERNEL_GRID if grid is None else grid))
    q = _default_spec(p) if q is None else q
    z = kernel_function(p)
    lhs = np.array([half_laplacian(z, x, q) for x in grid])
    rhs = _weight(p, grid) * np.exp(bubble_value(p, grid)) * z_rho_value(p, grid)
    return float(np.max(np.abs(lhs - rhs)))
