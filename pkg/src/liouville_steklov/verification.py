"""Pass/fail certificates for the spectral and analytic claims.

A certificate compares a measured number with a reference under one of three
relations: ``eq`` (|measured - reference| <= tolerance), ``le`` (measured <=
reference + tolerance) or ``ge`` (measured >= reference - tolerance).  Composite
certificates hold a list of parts and pass iff every part passes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .closed_forms import BubbleParams, RegularBubbleParams, dU_drho_value, validate_alpha
from .errors import InvalidParameter
from .fractional import verify_bubble_residual, verify_linearized_residual
from .geometry import (
    ConformalContext,
    DiskPairDomain,
    normalized_domain,
    perimeter,
    pullback_eigenfunction,
    tau_alpha,
    unit_disk,
    upper_arc_length_numeric,
)
from .steklov import (
    DEFAULT_GRADING,
    DEFAULT_N_PER_ARC,
    boundary_nodal_count,
    compute_sector_spectrum,
    discretize,
    gap_tolerance,
    solve,
)

__all__ = [
    "Certificate",
    "SolverSettings",
    "spectrum_for",
    "check_mu_alpha_identity",
    "check_eigenvalue_placement",
    "check_weinstock",
    "check_sector_bounds",
    "morse_index",
    "check_nondegeneracy_pipeline",
    "check_regular_control",
    "check_bubble_residual",
    "check_linearized_residual",
    "half_plane_sample",
]

RELATIONS = ("eq", "le", "ge", "all")


@dataclass
class Certificate:
    name: str
    params: dict
    measured: object
    reference: object
    tolerance: float
    relation: str = "eq"
    provenance: str = "closed-form"
    parts: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise InvalidParameter(f"relation must be one of {RELATIONS}")

    def passes_at(self, tolerance: float) -> bool:
        if self.relation == "all":
            return all(p.passed for p in self.parts)
        m, r = float(self.measured), float(self.reference)
        if not (math.isfinite(m) and math.isfinite(r)):
            return False
        if self.relation == "eq":
            return abs(m - r) <= tolerance
        if self.relation == "le":
            return m <= r + tolerance
        return m >= r - tolerance

    @property
    def passed(self) -> bool:
        return self.passes_at(self.tolerance)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def first_failure(self) -> Optional["Certificate"]:
        if self.passed:
            return None
        for p in self.parts:
            f = p.first_failure()
            if f is not None:
                return f
        return self

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "params": self.params,
            "measured": _jsonable(self.measured),
            "reference": _jsonable(self.reference),
            "tolerance": self.tolerance,
            "relation": self.relation,
            "verdict": self.verdict,
            "provenance": self.provenance,
        }
        if self.details:
            out["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        if self.parts:
            out["parts"] = [p.to_json() for p in self.parts]
        return out

    def json_line(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, allow_nan=True)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _composite(name, params, parts, provenance="composite", details=None):
    return Certificate(name, params, sum(p.passed for p in parts), len(parts), 0.0, "all", provenance, parts, details or {})


@dataclass(frozen=True)
class SolverSettings:
    n_per_arc: int = DEFAULT_N_PER_ARC
    grading: float = DEFAULT_GRADING
    tol: float = 1e-6  # convergence tolerance of the spectrum
    eig_tol: float = 1e-5  # |mu - 1| acceptance band

    def to_json(self) -> dict:
        return {"n_per_arc": self.n_per_arc, "grading": self.grading, "tol": self.tol, "eig_tol": self.eig_tol}


@lru_cache(maxsize=64)
def _cached_solve(mode, ell, k, settings: SolverSettings):
    d = DiskPairDomain(ell, mode)
    return solve(d, k, settings.tol, settings.n_per_arc, settings.grading)


def spectrum_for(d: DiskPairDomain, k: int, settings: SolverSettings = SolverSettings()):
    """(spectrum, discretisation) for ``d``; memoised per (domain, k, settings)."""
    return _cached_solve(d.mode, d.ell, k, settings)


def _domain_params(d: DiskPairDomain) -> dict:
    return {"mode": d.mode, "ell": d.ell}


# --------------------------------------------------------------------------
# geometry identity


def check_mu_alpha_identity(alpha: float, tolerance: float = 1e-14) -> Certificate:
    """1/sqrt(1 + tau^2) = sin(pi alpha/2) and ell(alpha) = |cos(pi alpha/2)|."""
    alpha = validate_alpha(alpha)
    tau = tau_alpha(alpha)
    mu = 1.0 / math.sqrt(1.0 + tau * tau)
    ell = normalized_domain(alpha).ell
    h = 0.5 * math.pi * alpha
    parts = [
        Certificate("mu_alpha", {"alpha": alpha}, mu, math.sin(h), tolerance),
        Certificate("ell_alpha", {"alpha": alpha}, ell, abs(math.cos(h)), tolerance),
    ]
    return _composite("mu_alpha_identity", {"alpha": alpha}, parts, details={"tau": tau, "mu": mu, "ell": ell})


# --------------------------------------------------------------------------
# spectral placement


def check_eigenvalue_placement(ell: float, mode: str, settings: SolverSettings = SolverSettings()) -> Certificate:
    """Eigenvalue 1 sits at position 2 (intersection) or 3 (union), simple,
    with the expected parity labels and neighbours."""
    d = DiskPairDomain(ell, mode)
    s, b = spectrum_for(d, 5, settings)
    ev, lab = s.eigenvalues, s.symmetry_labels
    g = s.gap_tol
    P = _domain_params(d)
    tol = settings.eig_tol
    if mode == "intersection":
        nodal = boundary_nodal_count(s.eigenvectors[:, 1], b, 10.0 * s.est_error)
        parts = [
            Certificate("mu2_equals_1", P, ev[1], 1.0, tol),
            Certificate("mu2_gap_below", P, ev[1] - ev[0], g, 0.0, "ge", "bound"),
            Certificate("mu2_gap_above", P, ev[2] - ev[1], g, 0.0, "ge", "bound"),
            Certificate("mu2_label_oe", P, float(lab[1] == "oe"), 1.0, 0.0),
            Certificate("mu2_boundary_sign_changes", P, nodal, 2, 0.0),
        ]
    elif mode == "union":
        parts = [
            Certificate("mu2_below_1", P, ev[1], 1.0 - g, 0.0, "le", "bound"),
            Certificate("mu2_label_eo", P, float(lab[1] == "eo"), 1.0, 0.0),
            Certificate("mu3_equals_1", P, ev[2], 1.0, tol),
            Certificate("mu3_gap_below", P, ev[2] - ev[1], g, 0.0, "ge", "bound"),
            Certificate("mu4_above_1", P, ev[3], 1.0 + g, 0.0, "ge", "bound"),
        ]
    else:
        raise InvalidParameter("placement is defined for intersection and union domains")
    details = {"eigenvalues": ev, "labels": lab, "est_error": s.est_error, "gap_tol": g, "n_per_arc": s.n_per_arc}
    return _composite("eigenvalue_placement", P, parts, details=details)


def check_weinstock(ell: float, settings: SolverSettings = SolverSettings(), tolerance: float = 1e-6) -> Certificate:
    """mu_2 <= 2 pi / perimeter on the union, whose perimeter exceeds 2 pi."""
    d = DiskPairDomain(ell, "union")
    s, _ = spectrum_for(d, 5, settings)
    L = perimeter(d)
    P = _domain_params(d)
    parts = [
        Certificate("weinstock_bound", P, s.eigenvalues[1], 2.0 * math.pi / L, tolerance, "le", "bound"),
        Certificate("perimeter_exceeds_2pi", P, L, 2.0 * math.pi, 0.0, "ge", "closed-form"),
    ]
    return _composite("weinstock", P, parts, details={"mu2": s.eigenvalues[1], "perimeter": L})


def check_sector_bounds(
    ell: float, mode: str, settings: SolverSettings = SolverSettings(), tolerance: float = 1e-4, k: int = 3
) -> Certificate:
    """Lower bounds from the one-dimensional problems on the upper arc Gamma:
    eo eigenvalues >= pi/|Gamma| on intersections, nonzero ee eigenvalues
    >= 2 pi/|Gamma| on unions.  |Gamma| is measured by quadrature."""
    d = DiskPairDomain(ell, mode)
    gamma = upper_arc_length_numeric(d)
    b = discretize(d, settings.n_per_arc, settings.grading)
    P = _domain_params(d)
    if mode == "intersection":
        s = compute_sector_spectrum(b, "eo", k, settings.tol)
        measured, bound = float(s.eigenvalues.min()), math.pi / gamma
        extra = Certificate("gamma_below_pi", P, gamma, math.pi, 0.0, "le", "numeric-oracle")
    elif mode == "union":
        s = compute_sector_spectrum(b, "ee", k + 1, settings.tol)
        positive = s.eigenvalues[s.eigenvalues > gap_tolerance(s.est_error)]
        measured, bound = float(positive.min()), 2.0 * math.pi / gamma
        extra = Certificate("gamma_below_2pi", P, gamma, 2.0 * math.pi, 0.0, "le", "numeric-oracle")
    else:
        raise InvalidParameter("sector bounds are defined for intersection and union domains")
    parts = [Certificate("sector_lower_bound", P, measured, bound, tolerance, "ge", "bound"), extra]
    details = {"gamma_length": gamma, "sector_eigenvalues": s.eigenvalues, "bound": bound, "est_error": s.est_error}
    return _composite("sector_bounds", P, parts, details=details)


def morse_index(alpha: float, settings: SolverSettings = SolverSettings()) -> Certificate:
    """Number of eigenvalues of the normalized domain below 1 - gap_tol;
    expected 1 for alpha < 1 and 2 for alpha > 1."""
    alpha = validate_alpha(alpha)
    d = normalized_domain(alpha)
    s, _ = spectrum_for(d, 5, settings)
    g = s.gap_tol
    if s.eigenvalues[-1] < 1.0 - g:
        raise InvalidParameter("too few eigenvalues computed to count the index")
    index = int(np.sum(s.eigenvalues < 1.0 - g))
    expected = 1 if alpha < 1.0 else 2
    P = {"alpha": alpha, **_domain_params(d)}
    return Certificate("morse_index", P, index, expected, 0.0, "eq", "closed-form",
                       details={"eigenvalues": s.eigenvalues, "gap_tol": g})


# --------------------------------------------------------------------------
# fractional residuals as certificates


def check_bubble_residual(p, tolerance: float = None) -> Certificate:
    tolerance = (1e-6 if isinstance(p, RegularBubbleParams) else 1e-4) if tolerance is None else tolerance
    r = verify_bubble_residual(p)
    return Certificate("bubble_residual", {"alpha": p.alpha, "rho": p.rho}, r, 0.0, tolerance, "le", "quadrature")


def check_linearized_residual(p, tolerance: float = None) -> Certificate:
    tolerance = (1e-6 if isinstance(p, RegularBubbleParams) else 1e-4) if tolerance is None else tolerance
    r = verify_linearized_residual(p)
    return Certificate("linearized_residual", {"alpha": p.alpha, "rho": p.rho}, r, 0.0, tolerance, "le", "quadrature")


# --------------------------------------------------------------------------
# end to end


def half_plane_sample(n: int = 200, seed: int = 0) -> np.ndarray:
    """Seeded points in the upper half-plane, log-uniform in radius over
    [1e-2, 1e2] and uniform in angle over (0, pi)."""
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), n))
    th = rng.uniform(0.0, math.pi, n)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def pullback_residual(alpha: float, rho: float = 1.0, n: int = 200, seed: int = 0) -> float:
    ctx = ConformalContext(alpha, rho)
    q = half_plane_sample(n, seed)
    return float(np.max(np.abs(pullback_eigenfunction(ctx, q) + rho * dU_drho_value(ctx.bubble, q))))


def check_nondegeneracy_pipeline(
    alpha: float, rho: float = 1.0, settings: SolverSettings = SolverSettings(), n_sample: int = 200, seed: int = 0
) -> Certificate:
    """(i) eigenvalue 1 is simple on the normalized domain; (ii) its
    eigenvector is the trace of x up to scale; (iii) x pulled back to the
    half-plane is -rho dU/drho, and z_rho solves the linearized equation."""
    alpha = validate_alpha(alpha)
    d = normalized_domain(alpha)
    s, b = spectrum_for(d, 5, settings)
    i = 1 if alpha < 1.0 else 2
    P = {"alpha": alpha, "rho": rho}
    psi = s.eigenvectors[:, i]
    x = b.nodes[:, 0]
    c = b.boundary_inner(psi, x) / b.boundary_inner(x, x)
    fit = b.boundary_norm(psi - c * x) / b.boundary_norm(psi)
    parts = [
        Certificate("eigenvalue_1", P, s.eigenvalues[i], 1.0, settings.eig_tol),
        Certificate("eigenvalue_1_simple", P, float(s.is_simple(i)), 1.0, 0.0),
        Certificate("eigenvector_is_x", P, fit, 0.0, settings.eig_tol, "le", "closed-form"),
        Certificate("pullback_identity", P, pullback_residual(alpha, rho, n_sample, seed), 0.0, 1e-11, "le", "closed-form"),
        check_linearized_residual(BubbleParams(alpha, rho)),
    ]
    return _composite("nondegeneracy_pipeline", P, parts, details={"eigenvalues": s.eigenvalues, "scale_fit": c})


def check_regular_control(settings: SolverSettings = SolverSettings()) -> Certificate:
    """alpha = 1: eigenvalue 1 of the unit disk has multiplicity 2, matching the
    two kernel directions d/dmu and d/dxi of the regular bubble."""
    s, b = spectrum_for(unit_disk(), 4, settings)
    mult = s.multiplicities()
    i = int(np.argmin(np.abs(s.eigenvalues - 1.0)))
    P = {"alpha": 1.0, "mode": "disk"}
    parts = [
        Certificate("eigenvalue_1_multiplicity", P, mult[i], 2, 0.0),
        check_linearized_residual(RegularBubbleParams()),
    ]
    return _composite("regular_control", P, parts, details={"eigenvalues": s.eigenvalues, "multiplicities": mult})
