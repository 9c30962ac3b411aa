import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import shichi

from liouville_steklov.closed_forms import (
    BubbleParams,
    HalfPlanePoint,
    RegularBubbleParams,
    bubble_value,
    extension_value,
    z_rho_value,
)
from liouville_steklov.errors import (
    InvalidParameter,
    QuadratureNotConverged,
    TailModelMissing,
)
from liouville_steklov.fractional import (
    QuadratureSpec,
    SampledFunction,
    bubble_function,
    half_laplacian,
    kernel_function,
    near_field_integral,
    poisson_extend,
    verify_bubble_residual,
    verify_linearized_residual,
)

# (alpha, rho=1, x) -> (-Delta)^{1/2} u_rho(x), mpmath at 40 digits with
# tanh-sinh on the paired near field and the far field to infinity
HALF_LAPLACIAN_ORACLE = [
    (0.5, 1.0, 0.2071067811865475244),
    (0.5, 4.0, 0.045162761939198165353),
    (1.5, 1.0, 3.6213203435596425732),
    (1.5, 0.25, 1.2644242896275461441),
]
# Poisson integral of u_rho (alpha = 1/2, rho = 1) at (1, 1), mpmath
POISSON_ORACLE = -1.87514450976097081598


def regular(mu=1.0, xi=0.0):
    return RegularBubbleParams(mu, xi)


@pytest.mark.parametrize("alpha,x,want", HALF_LAPLACIAN_ORACLE)
def test_half_laplacian_oracle(alpha, x, want):
    assert half_laplacian(bubble_function(BubbleParams(alpha, 1.0)), x) == pytest.approx(want, abs=1e-10)


def test_regular_bubble_at_origin():
    assert half_laplacian(bubble_function(regular()), 0.0) == pytest.approx(2.0, abs=1e-8)


def test_regular_kernel_at_origin():
    assert half_laplacian(kernel_function(regular()), 0.0) == pytest.approx(-2.0, abs=1e-8)


def test_constant():
    c = SampledFunction(lambda t: np.full_like(t, 3.25), (0.0, 3.25))
    for x in (-2.0, 0.0, 0.4, 7.0):
        assert half_laplacian(c, x) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.sampled_from([-1.0, -0.25, 0.5, 2.0]))
def test_linearity(a, b, x):
    p = BubbleParams(0.7, 1.0)
    u, v = bubble_function(p), kernel_function(p)
    (bu, cu), (bv, cv) = u.tail_model, v.tail_model
    w = SampledFunction(lambda t: a * u(t) + b * v(t), (a * bu + b * bv, a * cu + b * cv),
                        tail_tol=abs(a) * u.tail_tol + abs(b) * v.tail_tol + 1e-14)
    q = QuadratureSpec(target_tol=1e-9)
    lhs = half_laplacian(w, x, q)
    rhs = a * half_laplacian(u, x, q) + b * half_laplacian(v, x, q)
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_near_field_convergence_order():
    # int_0^a (2e^x - e^{x+s} - e^{x-s}) / s^2 ds = 2 e^x ((cosh a - 1)/a - Shi(a))
    a, x, order = 6.0, 0.0, 4
    u = SampledFunction(np.exp)
    exact = 2 * math.exp(x) * ((math.cosh(a) - 1) / a - shichi(a)[0])
    err = [abs(near_field_integral(u, x, a, m, order) - exact) for m in (2, 4, 8)]
    rates = [math.log2(e0 / e1) for e0, e1 in zip(err, err[1:])]
    for r in rates:
        assert abs(r - 2 * order) <= 0.5


def test_residual_monotone_in_tolerance():
    coarse = dict(panel_order=4, near_field_panels=1)
    for fn in (verify_bubble_residual, verify_linearized_residual):
        r = [fn(regular(), q=QuadratureSpec(target_tol=t, **coarse)) for t in (1e-2, 1e-4, 1e-6, 1e-8, 1e-10)]
        assert all(b <= a for a, b in zip(r, r[1:]))
        assert r[-1] < r[0]


@pytest.mark.parametrize("alpha,rho", [(0.5, 1.0), (1.5, 2.0), (0.3, 1.0), (1.7, 1.0)])
def test_bubble_residual(alpha, rho):
    assert verify_bubble_residual(BubbleParams(alpha, rho)) <= 1e-4


@pytest.mark.parametrize("alpha,rho", [(0.7, 1.0), (1.3, 0.5)])
def test_linearized_residual(alpha, rho):
    assert verify_linearized_residual(BubbleParams(alpha, rho)) <= 1e-4


def test_regular_residuals():
    assert verify_bubble_residual(regular()) <= 1e-6
    assert verify_linearized_residual(regular()) <= 1e-6
    assert verify_bubble_residual(regular(2.0, 0.5), grid=[-1.0, 0.5, 3.0]) <= 1e-6


def test_residual_is_not_vacuous():
    # the wrong right-hand side (missing weight) is caught
    p = BubbleParams(0.5, 1.0)
    lhs = half_laplacian(bubble_function(p), 4.0)
    assert abs(lhs - math.exp(bubble_value(p, 4.0))) > 1e-2


def test_grid_must_avoid_origin_below_one():
    with pytest.raises(InvalidParameter):
        verify_bubble_residual(BubbleParams(0.5, 1.0), grid=[0.0, 1.0])


def test_poisson_log():
    ln = SampledFunction(lambda t: np.log(np.abs(t)), (-1.0, 0.0))
    assert poisson_extend(ln, HalfPlanePoint(3.0, 4.0)) == pytest.approx(math.log(5.0), abs=1e-10)


@pytest.mark.parametrize("pt", [(0.0, 1.0), (2.5, 0.1), (-7.0, 3.0), (0.3, 40.0)])
def test_poisson_constant(pt):
    one = SampledFunction(lambda t: np.ones_like(t), (0.0, 1.0))
    assert poisson_extend(one, pt) == pytest.approx(1.0, abs=1e-12)


def test_poisson_bubble():
    p = BubbleParams(0.5, 1.0)
    val = poisson_extend(bubble_function(p), (1.0, 1.0))
    assert abs(val - extension_value(p, (1.0, 1.0))) <= 1e-5
    assert val == pytest.approx(POISSON_ORACLE, abs=1e-10)


@pytest.mark.parametrize("pt", [(0.5, 0.5), (-2.0, 1.0), (3.0, 0.2)])
def test_poisson_kernel_function(pt):
    p = BubbleParams(1.3, 0.5)
    from liouville_steklov.closed_forms import dU_drho_value

    assert poisson_extend(kernel_function(p), pt) == pytest.approx(dU_drho_value(p, pt), abs=1e-7)


def test_errors():
    bare = SampledFunction(np.cos)
    with pytest.raises(TailModelMissing):
        half_laplacian(bare, 0.0)
    with pytest.raises(TailModelMissing):
        poisson_extend(bare, (0.0, 1.0))
    u = bubble_function(BubbleParams(0.5, 1.0))
    with pytest.raises(TailModelMissing):
        half_laplacian(u, 0.0, QuadratureSpec(truncation_radius=1e3))
    with pytest.raises(TailModelMissing):
        half_laplacian(u, 1.0, QuadratureSpec(target_tol=1e-14))
    with pytest.raises(InvalidParameter):
        poisson_extend(u, (0.0, 0.0))
    rough = SampledFunction(lambda t: np.abs(np.sin(300 * t)) * np.exp(-t * t), (0.0, 0.0), tail_tol=1e-16)
    with pytest.raises(QuadratureNotConverged, match=r"changed the value by [1-9]"):
        half_laplacian(rough, 0.3, QuadratureSpec(target_tol=1e-13))


def test_tail_model_validated():
    with pytest.raises(InvalidParameter):
        SampledFunction(lambda t: np.log(1 + t * t), (2.0, 0.0))  # wrong sign of beta
    SampledFunction(lambda t: -np.log(1 + t * t), (2.0, 0.0))


@pytest.mark.parametrize(
    "kw",
    [dict(panel_order=3), dict(near_field_halfwidth=0.0), dict(near_field_halfwidth=10, truncation_radius=5),
     dict(target_tol=0.0), dict(near_field_panels=0)],
)
def test_spec_validation(kw):
    with pytest.raises(InvalidParameter):
        QuadratureSpec(**kw)


def test_kernel_tail():
    p = BubbleParams(0.7, 2.0)
    z = kernel_function(p)
    assert z.tail_model == (0.0, 0.5)
    assert abs(z_rho_value(p, 1e6) - 0.5) <= z.tail_tol
