import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liouville_steklov.closed_forms import (
    BubbleParams,
    HalfPlanePoint,
    RegularBubbleParams,
    asymptotic_constant,
    asymptotic_limit,
    bubble_value,
    dU_drho_value,
    extension_value,
    z_rho_value,
    z_xi_value,
)
from liouville_steklov.errors import AlphaOutOfRange, InvalidParameter

alphas = st.one_of(st.floats(0.05, 0.95), st.floats(1.05, 1.95))
rhos = st.floats(0.1, 10.0)


def test_regular_bubble_at_origin():
    assert bubble_value(RegularBubbleParams(1.0, 0.0), 0.0) == pytest.approx(math.log(2.0), abs=1e-15)


def test_bubble_at_origin_alpha_half():
    assert bubble_value(BubbleParams(0.5, 1.0), 0.0) == pytest.approx(math.log(math.sqrt(2) / 2), abs=1e-15)
    assert bubble_value(BubbleParams(0.5, 1.0), 0.0) == pytest.approx(-0.346574, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.0, -0.5, 1.0, 2.0, 2.5, float("nan")])
def test_bad_alpha(alpha):
    with pytest.raises(AlphaOutOfRange):
        BubbleParams(alpha, 1.0)


@pytest.mark.parametrize("rho", [0.0, -1.0, float("inf")])
def test_bad_rho(rho):
    with pytest.raises(InvalidParameter):
        BubbleParams(0.5, rho)


def test_half_plane_point_rejects_lower():
    with pytest.raises(InvalidParameter):
        HalfPlanePoint(0.0, -1e-3)
    assert HalfPlanePoint(-1.0, 0.0).theta == pytest.approx(math.pi)


def test_scaling_grid():
    # u_rho(rho^{1/a} t) = u_1(t) - ln rho on a 100-point grid
    rng = np.random.default_rng(1)
    for _ in range(100):
        a = rng.choice([rng.uniform(0.05, 0.95), rng.uniform(1.05, 1.95)])
        rho = math.exp(rng.uniform(-2, 2))
        t = rng.uniform(-5, 5)
        lhs = bubble_value(BubbleParams(a, rho), rho ** (1 / a) * t)
        rhs = bubble_value(BubbleParams(a, 1.0), t) - math.log(rho)
        assert abs(lhs - rhs) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(alphas, rhos, st.floats(-50, 50))
def test_evenness(a, rho, x):
    p = BubbleParams(a, rho)
    assert bubble_value(p, x) == bubble_value(p, -x)
    assert z_rho_value(p, x) == z_rho_value(p, -x)


@settings(max_examples=60, deadline=None)
@given(alphas, rhos, st.floats(-20, 20))
def test_trace_identities(a, rho, x):
    p = BubbleParams(a, rho)
    assert extension_value(p, (x, 0.0)) == pytest.approx(bubble_value(p, x), abs=1e-12)
    assert dU_drho_value(p, (x, 0.0)) == pytest.approx(z_rho_value(p, x), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(alphas, rhos, st.floats(1e-3, 30))
def test_z_sign_structure(a, rho, x):
    p = BubbleParams(a, rho)
    s = x**a
    z = z_rho_value(p, x)
    if s < rho * (1 - 1e-9):
        assert z < 0
    elif s > rho * (1 + 1e-9):
        assert z > 0


def test_z_single_sign_change_per_half_line():
    for a, rho in [(0.3, 1.0), (0.7, 2.0), (1.3, 0.5), (1.8, 3.0)]:
        x = np.linspace(1e-4, 50, 20001)
        z = z_rho_value(BubbleParams(a, rho), x)
        assert np.count_nonzero(np.diff(np.sign(z))) == 1


def test_z_examples():
    p = BubbleParams(0.7, 2.0)
    assert z_rho_value(p, 0.0) == pytest.approx(-0.5, abs=1e-15)
    assert z_rho_value(p, 2.0 ** (1 / 0.7)) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("a,rho", [(0.4, 1.0), (1.6, 0.7)])
def test_z_finite_difference(a, rho):
    x = np.linspace(-3, 3, 41)
    z = z_rho_value(BubbleParams(a, rho), x)
    errs = []
    for h in (2e-3, 1e-3):
        fd = (bubble_value(BubbleParams(a, rho + h), x) - bubble_value(BubbleParams(a, rho - h), x)) / (2 * h)
        errs.append(np.max(np.abs(fd - z)))
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("a,rho", [(0.5, 1.0), (1.5, 2.0)])
def test_dU_drho_finite_difference(a, rho):
    rng = np.random.default_rng(3)
    q = np.column_stack([rng.uniform(-3, 3, 30), rng.uniform(0.1, 3, 30)])
    exact = dU_drho_value(BubbleParams(a, rho), q)
    errs = []
    for h in (1e-2, 5e-3):
        fd = (extension_value(BubbleParams(a, rho + h), q) - extension_value(BubbleParams(a, rho - h), q)) / (2 * h)
        errs.append(np.max(np.abs(fd - exact)))
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_dU_drho_zero_on_level_curve():
    p = BubbleParams(1.3, 2.0)
    r = 2.0 ** (1 / 1.3)
    th = np.linspace(0, math.pi, 9)
    assert np.max(np.abs(dU_drho_value(p, np.column_stack([r * np.cos(th), r * np.sin(th)])))) < 1e-15


def test_regular_extension_example():
    p = RegularBubbleParams(1.0, 0.0)
    assert extension_value(p, HalfPlanePoint(0.0, 1.0)) == pytest.approx(-math.log(2.0), abs=1e-15)


def _laplacian_error(f, pts, h):
    x, y = pts[:, 0], pts[:, 1]
    lap = (
        f(np.column_stack([x + h, y])) + f(np.column_stack([x - h, y]))
        + f(np.column_stack([x, y + h])) + f(np.column_stack([x, y - h])) - 4 * f(pts)
    ) / h**2
    return np.max(np.abs(lap))


@pytest.mark.parametrize("a", [0.5, 1.5])
@pytest.mark.parametrize("which", ["U", "dU"])
def test_harmonic_second_order(a, which):
    p = BubbleParams(a, 1.0)
    f = (lambda q: extension_value(p, q)) if which == "U" else (lambda q: dU_drho_value(p, q))
    pts = np.array([[0.7, 0.8], [-1.2, 0.5], [2.0, 1.5], [-0.4, 2.2]])
    e1, e2 = _laplacian_error(f, pts, 2e-2), _laplacian_error(f, pts, 1e-2)
    assert e2 < 1e-3
    assert e1 / e2 == pytest.approx(4.0, rel=0.1)


def test_regular_kernels():
    p = RegularBubbleParams(1.5, 0.3)
    x = np.linspace(-3, 3, 13)
    h = 1e-5
    fd_xi = (bubble_value(RegularBubbleParams(1.5, 0.3 + h), x) - bubble_value(RegularBubbleParams(1.5, 0.3 - h), x)) / (2 * h)
    fd_mu = (bubble_value(RegularBubbleParams(1.5 + h, 0.3), x) - bubble_value(RegularBubbleParams(1.5 - h, 0.3), x)) / (2 * h)
    assert np.max(np.abs(fd_xi - z_xi_value(p, x))) < 1e-9
    assert np.max(np.abs(fd_mu - z_rho_value(p, x))) < 1e-9


def test_singular_family_matches_regular_formula_shape():
    # the alpha -> 1 limit of the singular formula is the regular bubble with xi = 0
    x = np.linspace(-3, 3, 13)
    near = bubble_value(BubbleParams(1 - 1e-9, 1.0), x)
    assert np.max(np.abs(near - bubble_value(RegularBubbleParams(1.0, 0.0), x))) < 1e-7


# frozen with mpmath at 40 digits
ASYM_ALPHA_HALF_1E6 = -0.347987803371440946


def test_asymptotic_limit_values():
    assert asymptotic_limit(BubbleParams(0.5, 1.0)) == pytest.approx(math.log(math.sin(math.pi / 4)), abs=1e-15)
    assert asymptotic_limit(RegularBubbleParams()) == pytest.approx(math.log(2.0), abs=1e-15)


def test_asymptotic_constant_frozen():
    p = BubbleParams(0.5, 1.0)
    assert asymptotic_constant(p, 1e6) == pytest.approx(ASYM_ALPHA_HALF_1E6, abs=1e-12)


def test_asymptotic_tail_expansion():
    # deviation - limit = -ln(1 + 2 rho cos(h) |x|^-a + rho^2 |x|^-2a) ~ -2 rho cos(h) |x|^-a
    p = BubbleParams(0.5, 1.0)
    lim = asymptotic_limit(p)
    for x in (1e6, 1e8, 1e12):
        dev = asymptotic_constant(p, x) - lim
        lead = -2 * math.cos(math.pi / 4) * x**-0.5
        assert dev == pytest.approx(lead, rel=2e-3)
    # 1e-5 closeness needs |x| of order 1e10 at alpha = 1/2
    assert abs(asymptotic_constant(p, 1e12) - lim) < 1e-5


def test_asymptotic_monotone():
    for p in (BubbleParams(0.5, 1.0), BubbleParams(1.5, 2.0), RegularBubbleParams()):
        lim = asymptotic_limit(p)
        d = [abs(asymptotic_constant(p, 10.0**k) - lim) for k in range(2, 7)]
        assert all(b < a for a, b in zip(d, d[1:]))
    p = RegularBubbleParams()
    assert asymptotic_constant(p, 1e6) == pytest.approx(math.log(2.0), abs=1e-11)


def test_broadcasting():
    p = BubbleParams(0.5, 1.0)
    x = np.linspace(-1, 1, 7)
    assert bubble_value(p, x).shape == (7,)
    assert isinstance(bubble_value(p, 0.3), float)
    q = np.zeros((3, 4, 2))
    q[..., 1] = 1.0
    assert extension_value(p, q).shape == (3, 4)
