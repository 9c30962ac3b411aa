"""Steklov eigenvalues of disk-pair domains by a boundary-integral DtN map.

For a harmonic u in a bounded domain, Green's representation on the boundary
reads ``(I/2 + K) u = S dn(u)`` with the double-layer operator K and the
logarithmic single-layer operator S.  Both are discretised by Nystrom
quadrature on Gauss-Legendre panels laid on the circular arcs, graded
algebraically toward the corners, giving the discrete Dirichlet-to-Neumann
matrix ``D = S^{-1} (I/2 + K)`` acting on nodal traces.

Interactions between a target node and a nearby source panel (self panel,
neighbours, and the other arc at a corner) are computed by product
integration on a geometric mesh clustered at the point of the panel closest
to the target.  Every point is also stored relative to its nearest corner so
that differences of nearby points near a corner keep full relative precision.

The disk-pair domains are invariant under both coordinate reflections and the
node set is built to be invariant too, so D block-diagonalises into the four
parity sectors ee, eo, oe, oo (first letter: parity under x -> -x, second:
under y -> -y).  Each block is solved with a dense nonsymmetric eigensolver.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as la

from .errors import DegenerateDomain, InvalidParameter, NotConverged, TooCloseToBoundary
from .geometry import ELL_MAX, ELL_MIN, DiskPairDomain

__all__ = [
    "BoundaryDiscretization",
    "SteklovSpectrum",
    "discretize",
    "assemble",
    "dtn_matrix",
    "symmetrized_dtn",
    "apply_dtn",
    "compute_spectrum",
    "compute_sector_spectrum",
    "solve",
    "classify_symmetry",
    "boundary_nodal_count",
    "interior_eval",
    "gap_tolerance",
    "companion",
    "sector_components",
    "SECTORS",
]

SECTORS = ("ee", "eo", "oe", "oo")
_SIGN = {"e": 1.0, "o": -1.0}
PANEL_ORDER = 16
DEFAULT_N_PER_ARC = 40
DEFAULT_GRADING = 3.0
# geometric near-field mesh: ratio, levels and points per piece
_NEAR_RATIO = 0.35
_NEAR_LEVELS = 34
_NEAR_POINTS = 12
_NEAR_FACTOR = 1.0


@lru_cache(maxsize=None)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=None)
def _bary_weights(n: int):
    t, _ = _gauss(n)
    w = np.array([1.0 / np.prod(t[j] - np.delete(t, j)) for j in range(n)])
    return w / np.abs(w).max()


def _lagrange(t_eval, n: int):
    """Lagrange basis on the n GL nodes evaluated at t_eval -> shape (..., n)."""
    t, _ = _gauss(n)
    bw = _bary_weights(n)
    diff = t_eval[..., None] - t
    exact = diff == 0.0
    diff = np.where(exact, 1.0, diff)
    terms = bw / diff
    out = terms / terms.sum(axis=-1, keepdims=True)
    hit = exact.any(axis=-1)
    if np.any(hit):
        out[hit] = exact[hit].astype(float)
    return out


@dataclass
class BoundaryDiscretization:
    domain: DiskPairDomain
    n_per_arc: int
    grading_exponent: float
    order: int
    # per panel
    panel_arc: np.ndarray
    panel_bounds: np.ndarray  # absolute angles (a0, a1)
    panel_corner: np.ndarray  # nearest corner id, -1 on the disk
    panel_sign: np.ndarray  # +1: angle = corner angle + delta, -1: minus
    panel_dnear: np.ndarray  # angular offset of the panel end nearest the corner
    # per node
    phi: np.ndarray
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    node_arc: np.ndarray
    node_panel: np.ndarray
    node_corner: np.ndarray
    node_rel: np.ndarray  # node minus its corner (node itself on the disk)
    node_delta: np.ndarray
    reflect_x: np.ndarray = None
    reflect_y: np.ndarray = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def panels(self) -> int:
        return len(self.panel_arc)

    @property
    def panel_lengths(self) -> np.ndarray:
        radii = np.array([a.radius for a in self.domain.arcs])
        return radii[self.panel_arc] * (self.panel_bounds[:, 1] - self.panel_bounds[:, 0])

    def boundary_inner(self, u, v) -> float:
        return float(np.sum(self.weights * u * v))

    def boundary_norm(self, u) -> float:
        return math.sqrt(self.boundary_inner(u, u))

    def trace(self, f) -> np.ndarray:
        """Nodal values of a function f(x, y)."""
        return np.asarray(f(self.nodes[:, 0], self.nodes[:, 1]), dtype=float)


def _graded_breaks(n: int, q: float):
    """Breakpoints g in [0, 1] clustered at both ends, and 1 - g, each
    computed without cancellation.

    g = v(s)^q / (v(s)^q + v(1-s)^q) with v(s) = s e^{s/4}; the extra factor
    keeps the end panels below (1/n)^q for every n >= 8.
    """
    s = np.linspace(0.0, 1.0, n + 1)
    a = (s * np.exp(0.25 * s)) ** q
    b = ((1.0 - s) * np.exp(0.25 * (1.0 - s))) ** q
    return a / (a + b), b / (a + b)


def _mirror_index(pts: np.ndarray, image: np.ndarray):
    from scipy.spatial import cKDTree

    dist, idx = cKDTree(pts).query(image)
    if dist.max() > 1e-9 * max(1.0, np.abs(pts).max()):
        return None
    return idx


def _rel_offset(radius, anchor, sign, delta):
    """radius * (e^{i(anchor + sign*delta)} - e^{i anchor}) as (..., 2)."""
    cm1 = -2.0 * np.sin(0.5 * delta) ** 2
    sn = sign * np.sin(delta)
    ca, sa = math.cos(anchor), math.sin(anchor)
    return np.stack([radius * (ca * cm1 - sa * sn), radius * (sa * cm1 + ca * sn)], axis=-1)


def _arc_corners(d: DiskPairDomain):
    # each arc runs counterclockwise from one corner to the other
    return [(0, 1), (1, 0)] if d.mode != "disk" else [(-1, -1)]


def discretize(
    d: DiskPairDomain,
    n_per_arc: int = DEFAULT_N_PER_ARC,
    grading: float = DEFAULT_GRADING,
    order: int = PANEL_ORDER,
) -> BoundaryDiscretization:
    """Corner-graded Gauss-Legendre panels on every arc of ``d``.

    Panel breakpoints follow g(s) = v(s)^q / (v(s)^q + v(1-s)^q), v(s) = s e^{s/4},
    in the arc's central angle, so the panel touching a corner has relative
    length at most (1/n_per_arc)^q.  The unit disk gets uniform panels.
    """
    if int(n_per_arc) != n_per_arc or n_per_arc < 8:
        raise InvalidParameter("n_per_arc must be an integer >= 8")
    n_per_arc = int(n_per_arc)
    if not grading >= 1.0:
        raise InvalidParameter("grading exponent must be >= 1")
    if order < 2:
        raise InvalidParameter("panel order must be >= 2")
    if d.mode != "disk" and not (ELL_MIN <= d.ell <= ELL_MAX):
        raise DegenerateDomain(f"ell={d.ell} outside the supported range [{ELL_MIN}, {ELL_MAX}]")
    if d.mode == "disk" and n_per_arc % 4:
        n_per_arc += 4 - n_per_arc % 4  # keeps the node set reflection invariant
    t, w = _gauss(order)
    P = {k: [] for k in ("arc", "bounds", "corner", "sign", "dnear")}
    N = {k: [] for k in ("phi", "nodes", "normals", "weights", "arc", "panel", "corner", "rel", "delta")}
    corner_pts = d.corners
    for k, (arc, (c_start, c_end)) in enumerate(zip(d.arcs, _arc_corners(d))):
        span = arc.angle_to - arc.angle_from
        if d.mode == "disk":
            g = np.linspace(0.0, 1.0, n_per_arc + 1)
            gc = 1.0 - g
        else:
            g, gc = _graded_breaks(n_per_arc, grading)
        for j in range(n_per_arc):
            a0 = arc.angle_from + span * g[j]
            a1 = arc.angle_from + span * g[j + 1] if j + 1 < n_per_arc else arc.angle_to
            half = 0.5 * (a1 - a0)
            pidx = len(P["arc"])
            ph = 0.5 * (a0 + a1) + half * t
            if d.mode == "disk":
                corner, sign, dnear = -1, 1.0, 0.0
                delta = ph.copy()
                rel = np.column_stack([arc.radius * np.cos(ph), arc.radius * np.sin(ph)])
            else:
                if 2 * j + 1 < n_per_arc:
                    corner, sign, anchor, dnear = c_start, 1.0, arc.angle_from, span * g[j]
                    delta = dnear + half * (1.0 + t)
                else:
                    corner, sign, anchor, dnear = c_end, -1.0, arc.angle_to, span * gc[j + 1]
                    delta = dnear + half * (1.0 - t)
                rel = _rel_offset(arc.radius, anchor, sign, delta)
            for key, val in (("arc", k), ("bounds", (a0, a1)), ("corner", corner), ("sign", sign), ("dnear", dnear)):
                P[key].append(val)
            c, s = np.cos(ph), np.sin(ph)
            N["phi"].append(ph)
            if corner >= 0:
                N["nodes"].append(np.asarray(corner_pts[corner]) + rel)
            else:
                N["nodes"].append(np.column_stack([arc.center[0] + arc.radius * c, arc.center[1] + arc.radius * s]))
            N["normals"].append(np.column_stack([c, s]))
            N["weights"].append(half * arc.radius * w)
            N["arc"].append(np.full(order, k))
            N["panel"].append(np.full(order, pidx))
            N["corner"].append(np.full(order, corner))
            N["rel"].append(rel)
            N["delta"].append(delta)
    b = BoundaryDiscretization(
        domain=d,
        n_per_arc=n_per_arc,
        grading_exponent=float(grading),
        order=order,
        panel_arc=np.array(P["arc"]),
        panel_bounds=np.array(P["bounds"]),
        panel_corner=np.array(P["corner"]),
        panel_sign=np.array(P["sign"]),
        panel_dnear=np.array(P["dnear"]),
        phi=np.concatenate(N["phi"]),
        nodes=np.vstack(N["nodes"]),
        normals=np.vstack(N["normals"]),
        weights=np.concatenate(N["weights"]),
        node_arc=np.concatenate(N["arc"]),
        node_panel=np.concatenate(N["panel"]),
        node_corner=np.concatenate(N["corner"]),
        node_rel=np.vstack(N["rel"]),
        node_delta=np.concatenate(N["delta"]),
    )
    b.reflect_x = _mirror_index(b.nodes, b.nodes * np.array([-1.0, 1.0]))
    b.reflect_y = _mirror_index(b.nodes, b.nodes * np.array([1.0, -1.0]))
    return b


# --------------------------------------------------------------------------
# kernels and assembly

def _log_radius(b: BoundaryDiscretization) -> float:
    # -ln(|x-y|/R)/(2 pi) with R beyond the diameter keeps S positive definite
    return 4.0 * b.domain.scale * (1.0 + b.domain.ell)


def _same_circle_table(b: BoundaryDiscretization) -> np.ndarray:
    arcs = b.domain.arcs
    return np.array([[a.center == c.center for c in arcs] for a in arcs])


def _kernels(dx, dy, ny0, ny1, same_circle, radius, R):
    """Single- and double-layer kernels for differences x - y = (dx, dy)."""
    r2 = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        slp = -np.log(r2 / (R * R)) / (4.0 * math.pi)
        dlp = (dx * ny0 + dy * ny1) / (2.0 * math.pi * r2)
    dlp = np.where(same_circle, -1.0 / (4.0 * math.pi * radius), dlp)
    return slp, dlp


@lru_cache(maxsize=None)
def _near_template():
    """Geometric mesh on (0, 1] clustered at 0."""
    t, w = _gauss(_NEAR_POINTS)
    ends = _NEAR_RATIO ** np.arange(_NEAR_LEVELS + 1)
    nodes, wts = [], []
    for hi, lo in zip(ends[:-1], ends[1:]):
        nodes.append(0.5 * (hi + lo) + 0.5 * (hi - lo) * t)
        wts.append(0.5 * (hi - lo) * w)
    lo = ends[-1]
    nodes.append(0.5 * lo + 0.5 * lo * t)
    wts.append(0.5 * lo * w)
    return np.concatenate(nodes), np.concatenate(wts)


def _target_param(b: BoundaryDiscretization, pidx: int, targets: np.ndarray) -> np.ndarray:
    """Unclipped panel parameter of each target's projection onto the panel's circle."""
    arc = b.domain.arcs[b.panel_arc[pidx]]
    a0, a1 = b.panel_bounds[pidx]
    half = 0.5 * (a1 - a0)
    x = b.nodes[targets]
    ang = np.arctan2(x[:, 1] - arc.center[1], x[:, 0] - arc.center[0])
    mid = 0.5 * (a0 + a1)
    t = (np.mod(ang - mid + math.pi, 2.0 * math.pi) - math.pi) / half
    # same arc and corner: the stored angular offsets are exact near corners
    c = b.panel_corner[pidx]
    if c >= 0:
        sel = (b.node_arc[targets] == b.panel_arc[pidx]) & (b.node_corner[targets] == c)
        sgn = b.panel_sign[pidx]
        t_off = sgn * ((b.node_delta[targets] - b.panel_dnear[pidx]) / half - 1.0)
        t = np.where(sel, t_off, t)
    return t


def _near_weights(b: BoundaryDiscretization, pidx: int, targets: np.ndarray, R: float, same_tab):
    """Product-integration weights (ntargets, order) for S and K on one panel."""
    arc_i = b.panel_arc[pidx]
    arc = b.domain.arcs[arc_i]
    a0, a1 = b.panel_bounds[pidx]
    half = 0.5 * (a1 - a0)
    t_raw = _target_param(b, pidx, targets)
    ts = np.clip(t_raw, -1.0, 1.0)
    v, vw = _near_template()
    left_len = ts + 1.0
    right_len = 1.0 - ts
    off = np.concatenate([-left_len[:, None] * v, right_len[:, None] * v], axis=1)
    tq = ts[:, None] + off
    wq = np.concatenate([left_len[:, None] * vw, right_len[:, None] * vw], axis=1)
    ph = 0.5 * (a0 + a1) + half * tq
    ny0, ny1 = np.cos(ph), np.sin(ph)
    corner = b.panel_corner[pidx]
    x = b.nodes[targets]
    if corner >= 0:
        sgn = b.panel_sign[pidx]
        onep = left_len[:, None] + off if sgn > 0 else right_len[:, None] - off
        delta = b.panel_dnear[pidx] + half * onep
        anchor = arc.angle_from if sgn > 0 else arc.angle_to
        yrel = _rel_offset(arc.radius, anchor, sgn, delta)
        cpt = np.asarray(b.domain.corners[corner])
        xrel = np.where((b.node_corner[targets] == corner)[:, None], b.node_rel[targets], x - cpt)
    else:
        yrel = np.stack([arc.center[0] + arc.radius * ny0, arc.center[1] + arc.radius * ny1], axis=-1)
        xrel = x
    dx = xrel[:, None, 0] - yrel[..., 0]
    dy = xrel[:, None, 1] - yrel[..., 1]
    same = same_tab[b.node_arc[targets], arc_i][:, None]
    slp, dlp = _kernels(dx, dy, ny0, ny1, same, arc.radius, R)
    # along one circle the chord follows from the angle offset directly
    dphi = half * ((ts - t_raw)[:, None] + off)
    chord = np.where(same, 2.0 * arc.radius * np.abs(np.sin(0.5 * dphi)), 1.0)
    slp = np.where(same, -np.log(chord / R) / (2.0 * math.pi), slp)
    L = _lagrange(tq, b.order) * (wq * half * arc.radius)[..., None]
    return np.einsum("tq,tqj->tj", slp, L), np.einsum("tq,tqj->tj", dlp, L)


def _pair_differences(b: BoundaryDiscretization):
    c = b.node_corner
    same_c = (c[:, None] == c[None, :]) & (c[:, None] >= 0)
    p, r = b.nodes, b.node_rel
    dx = np.where(same_c, r[:, None, 0] - r[None, :, 0], p[:, None, 0] - p[None, :, 0])
    dy = np.where(same_c, r[:, None, 1] - r[None, :, 1], p[:, None, 1] - p[None, :, 1])
    return dx, dy


def assemble(b: BoundaryDiscretization):
    """Return (S, A) with A = I/2 + K, so that A u = S dn(u) for harmonic u."""
    if "SA" in b._cache:
        return b._cache["SA"]
    R = _log_radius(b)
    same_tab = _same_circle_table(b)
    dx, dy = _pair_differences(b)
    same = same_tab[b.node_arc[:, None], b.node_arc[None, :]]
    radius = b.domain.arcs[0].radius
    slp, dlp = _kernels(dx, dy, b.normals[None, :, 0], b.normals[None, :, 1], same, radius, R)
    S = slp * b.weights[None, :]
    K = dlp * b.weights[None, :]
    del dx, dy, slp, dlp
    plen = b.panel_lengths
    order = b.order
    x = b.nodes
    for p in range(b.panels):
        cols = np.arange(p * order, (p + 1) * order)
        pts = x[cols]
        dist = np.min(np.hypot(x[:, None, 0] - pts[None, :, 0], x[:, None, 1] - pts[None, :, 1]), axis=1)
        near = np.nonzero(dist < _NEAR_FACTOR * plen[p])[0]
        ws, wd = _near_weights(b, p, near, R, same_tab)
        S[np.ix_(near, cols)] = ws
        K[np.ix_(near, cols)] = wd
    A = K
    A[np.diag_indices_from(A)] += 0.5
    b._cache["SA"] = (S, A)
    return S, A


def dtn_matrix(b: BoundaryDiscretization) -> np.ndarray:
    """Discrete Dirichlet-to-Neumann matrix D = S^{-1}(I/2 + K) on nodal traces."""
    if "D" not in b._cache:
        S, A = assemble(b)
        b._cache["D"] = la.solve(S, A, assume_a="gen")
    return b._cache["D"]


def symmetrized_dtn(b: BoundaryDiscretization) -> np.ndarray:
    """Symmetric part of W^{1/2} D W^{-1/2}: the DtN in the boundary L2 inner product."""
    D = dtn_matrix(b)
    sw = np.sqrt(b.weights)
    M = sw[:, None] * D / sw[None, :]
    return 0.5 * (M + M.T)


def apply_dtn(b: BoundaryDiscretization, u) -> np.ndarray:
    return dtn_matrix(b) @ np.asarray(u, dtype=float)


# --------------------------------------------------------------------------
# spectra

def gap_tolerance(est_error: float) -> float:
    return max(1e-3, 50.0 * est_error)


@dataclass
class SteklovSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (nodes, k), boundary-L2 normalised columns
    symmetry_labels: list
    est_error: float
    domain: DiskPairDomain = None
    n_per_arc: int = 0
    grading: float = DEFAULT_GRADING
    tol: float = float("nan")
    sector: str = None

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.eigenvalues)

    @property
    def gap_tol(self) -> float:
        return gap_tolerance(self.est_error)

    def multiplicities(self, gap_tol: float = None) -> list:
        """Size of the cluster (gaps <= gap_tol) each eigenvalue belongs to."""
        g = self.gap_tol if gap_tol is None else gap_tol
        ev = self.eigenvalues
        out = [1] * len(ev)
        start = 0
        for i in range(1, len(ev) + 1):
            if i == len(ev) or ev[i] - ev[i - 1] > g:
                for j in range(start, i):
                    out[j] = i - start
                start = i
        return out

    def is_simple(self, i: int, gap_tol: float = None) -> bool:
        """Gap to both neighbours exceeds gap_tol (the last one only checks
        below, so ask for one more eigenvalue than you test)."""
        g = self.gap_tol if gap_tol is None else gap_tol
        ev = self.eigenvalues
        lo = i == 0 or ev[i] - ev[i - 1] > g
        hi = i == len(ev) - 1 or ev[i + 1] - ev[i] > g
        return bool(lo and hi)

    def to_json(self) -> dict:
        d = self.domain
        return {
            "domain": {"mode": d.mode, "ell": d.ell, "scale": d.scale} if d is not None else None,
            "n_per_arc": self.n_per_arc,
            "grading": self.grading,
            "tol": self.tol,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "labels": list(self.symmetry_labels),
            "gaps": [float(v) for v in self.gaps],
            "est_error": float(self.est_error),
        }


def _orbits(b: BoundaryDiscretization):
    if b.reflect_x is None or b.reflect_y is None:
        raise InvalidParameter("discretisation is not reflection symmetric")
    reps = np.nonzero((b.nodes[:, 0] > 0) & (b.nodes[:, 1] > 0))[0]
    rx, ry = b.reflect_x[reps], b.reflect_y[reps]
    rxy = b.reflect_y[rx]
    return reps, rx, ry, rxy


def _parse_sector(sector) -> tuple:
    if isinstance(sector, (tuple, list)):
        sector = "".join(sector)
    if sector not in SECTORS:
        raise InvalidParameter(f"sector must be one of {SECTORS}, got {sector!r}")
    return sector, _SIGN[sector[0]], _SIGN[sector[1]]


def _normalise(b: BoundaryDiscretization, u: np.ndarray) -> np.ndarray:
    u = u / b.boundary_norm(u)
    mx = b.boundary_inner(u, b.nodes[:, 0])
    if abs(mx) > 1e-8:
        return u if mx > 0 else -u
    first = np.nonzero(np.abs(u) > 1e-8 * np.abs(u).max())[0][0]
    return u if u[first] >= 0 else -u


def _sector_eig(b: BoundaryDiscretization, sector: str):
    """All eigenpairs of D restricted to one parity sector, ascending."""
    sector, sx, sy = _parse_sector(sector)
    key = ("sector", sector)
    if key in b._cache:
        return b._cache[key]
    D = dtn_matrix(b)
    reps, rx, ry, rxy = _orbits(b)
    Ds = D[np.ix_(reps, reps)] + sx * D[np.ix_(reps, rx)] + sy * D[np.ix_(reps, ry)] + sx * sy * D[np.ix_(reps, rxy)]
    vals, vecs = la.eig(Ds)
    order = np.argsort(vals.real)
    vals, vecs = vals[order], vecs[:, order]
    full = np.zeros((b.size, len(vals)))
    for j in range(len(vals)):
        v = vecs[:, j]
        # a real eigenvalue has a real eigenvector up to a complex phase
        v = (v * np.exp(-0.5j * np.angle(np.sum(v * v)))).real
        u = np.empty(b.size)
        u[reps], u[rx], u[ry], u[rxy] = v, sx * v, sy * v, sx * sy * v
        full[:, j] = _normalise(b, u)
    out = (vals.real.copy(), full)
    b._cache[key] = out
    return out


def _raw_spectrum(b: BoundaryDiscretization, k: int):
    vals, vecs, labels = [], [], []
    for sec in SECTORS:
        ev, V = _sector_eig(b, sec)
        vals.append(ev[:k])
        vecs.append(V[:, :k])
        labels += [sec] * min(k, len(ev))
    vals = np.concatenate(vals)
    order = np.argsort(vals, kind="stable")[:k]
    return vals[order], np.hstack(vecs)[:, order], [labels[i] for i in order]


def companion(b: BoundaryDiscretization) -> BoundaryDiscretization:
    """Second discretisation used for error estimates: 2/3 of the panels, or
    4 more when that would drop below the minimum of 8."""
    n = int(round(b.n_per_arc * 2 / 3))
    n = n if n >= 8 else b.n_per_arc + 4
    if b.domain.mode == "disk" and n + (-n) % 4 == b.n_per_arc:
        n = b.n_per_arc + 4
    return discretize(b.domain, n, b.grading_exponent, b.order)


def _check_k(b: BoundaryDiscretization, k: int):
    if int(k) != k or k < 1 or k > b.size // 4:
        raise InvalidParameter(f"k must be an integer in [1, {b.size // 4}] for this discretisation")


def compute_spectrum(b: BoundaryDiscretization, k: int, tol: float = 1e-6, coarse=None) -> SteklovSpectrum:
    """First k Steklov eigenvalues with eigenvectors and parity labels.

    The error estimate is the largest change against a coarser discretisation;
    NotConverged is raised when it exceeds tol.
    """
    _check_k(b, k)
    vals, vecs, labels = _raw_spectrum(b, k)
    cb = companion(b) if coarse is None else coarse
    cvals, _, _ = _raw_spectrum(cb, k)
    # the lowest eigenvalue is exactly 0 (constants), so its size is an error measure too
    est = max(float(np.max(np.abs(vals - cvals))), abs(float(vals[0])))
    if not est <= tol:
        raise NotConverged(
            f"eigenvalues at n_per_arc={b.n_per_arc} and {cb.n_per_arc} differ by {est:.3e} > tol={tol:.1e}"
        )
    return SteklovSpectrum(vals, vecs, labels, est, b.domain, b.n_per_arc, b.grading_exponent, tol)


def compute_sector_spectrum(b: BoundaryDiscretization, sector, k: int, tol: float = 1e-6, coarse=None) -> SteklovSpectrum:
    """First k eigenvalues of the DtN restricted to one parity sector."""
    sector, _, _ = _parse_sector(sector)
    _check_k(b, k)
    ev, V = _sector_eig(b, sector)
    cev, _ = _sector_eig(companion(b) if coarse is None else coarse, sector)
    est = float(np.max(np.abs(ev[:k] - cev[:k])))
    if sector == "ee":
        est = max(est, abs(float(ev[0])))
    if not est <= tol:
        raise NotConverged(f"sector {sector}: refinements differ by {est:.3e} > tol={tol:.1e}")
    return SteklovSpectrum(
        ev[:k].copy(), V[:, :k].copy(), [sector] * k, est, b.domain, b.n_per_arc, b.grading_exponent, tol, sector
    )


def solve(
    d: DiskPairDomain,
    k: int,
    tol: float = 1e-6,
    n_per_arc: int = DEFAULT_N_PER_ARC,
    grading: float = DEFAULT_GRADING,
    max_n_per_arc: int = 96,
):
    """Refine n_per_arc by 1.5x until the spectrum is converged to tol.

    Returns (spectrum, discretisation).
    """
    b = discretize(d, n_per_arc, grading)
    coarse = None
    while True:
        try:
            return compute_spectrum(b, k, tol, coarse), b
        except NotConverged as exc:
            last = exc
        n_next = int(math.ceil(b.n_per_arc * 1.5))
        if n_next > max_n_per_arc:
            raise NotConverged(f"no convergence up to n_per_arc={b.n_per_arc}: {last}")
        coarse, b = b, discretize(d, n_next, grading)


# --------------------------------------------------------------------------
# eigenfunction diagnostics

def sector_components(b: BoundaryDiscretization, u) -> dict:
    """Split a nodal trace into its four parity components."""
    u = np.asarray(u, dtype=float)
    ux, uy = u[b.reflect_x], u[b.reflect_y]
    uxy = ux[b.reflect_y]
    out = {}
    for sec in SECTORS:
        sx, sy = _SIGN[sec[0]], _SIGN[sec[1]]
        out[sec] = 0.25 * (u + sx * ux + sy * uy + sx * sy * uxy)
    return out


def classify_symmetry(s: SteklovSpectrum, b: BoundaryDiscretization, threshold: float = 0.99) -> list:
    """Dominant parity class of each eigenvector, or 'mixed' when no class
    carries ``threshold`` of the boundary L2 norm squared."""
    labels = []
    for j in range(s.eigenvectors.shape[1]):
        u = s.eigenvectors[:, j]
        total = b.boundary_inner(u, u)
        frac = {sec: b.boundary_inner(c, c) / total for sec, c in sector_components(b, u).items()}
        best = max(frac, key=frac.get)
        labels.append(best if frac[best] >= threshold else "mixed")
    return labels


def boundary_nodal_count(v, b: BoundaryDiscretization, threshold: float = 1e-8) -> int:
    """Sign changes of a nodal trace around the closed boundary, skipping
    values with |v| <= threshold * max|v|."""
    v = np.asarray(v, dtype=float)
    if v.shape != (b.size,):
        raise InvalidParameter("trace length does not match the discretisation")
    keep = np.abs(v) > threshold * np.abs(v).max()
    sg = np.sign(v[keep])
    if sg.size < 2:
        return 0
    return int(np.sum(sg != np.roll(sg, 1)))


def interior_eval(v, b: BoundaryDiscretization, q):
    """Harmonic extension of a nodal trace at interior points q, from
    u(q) = int G dn(u) - int dn_y(G) u with dn(u) from the discrete DtN."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    v = np.asarray(v, dtype=float)
    dist = np.hypot(q[:, None, 0] - b.nodes[None, :, 0], q[:, None, 1] - b.nodes[None, :, 1])
    if np.any(dist < b.panel_lengths[b.node_panel][None, :]) or not np.all(b.domain.contains(q)):
        raise TooCloseToBoundary("evaluation point outside or within one panel length of the boundary")
    R = _log_radius(b)
    dn = apply_dtn(b, v)
    dx = q[:, None, 0] - b.nodes[None, :, 0]
    dy = q[:, None, 1] - b.nodes[None, :, 1]
    r2 = dx * dx + dy * dy
    G = -np.log(r2 / (R * R)) / (4.0 * math.pi)
    dG = (dx * b.normals[None, :, 0] + dy * b.normals[None, :, 1]) / (2.0 * math.pi * r2)
    out = (G * b.weights) @ dn - (dG * b.weights) @ v
    return out if len(out) > 1 else float(out[0])
