import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from heatcontent.errors import ConvergenceError, DomainError
from heatcontent.geometry import Cutoff, Profile
from heatcontent.regularize import QuadratureResult, i_reg, regularized_pairing, singular_quad


@pytest.mark.parametrize("f, alpha, expected", [
    (lambda r: np.ones_like(r), 0.5, 2.0),
    (lambda r: np.ones_like(r), 0.0, 1.0),
    (lambda r: r, 1.5, 2.0),
    (lambda r: r * r, 1.9, 1 / 1.1),
    (lambda r: np.cos(r), -0.5, None),
])
def test_singular_quad_examples(f, alpha, expected):
    res = singular_quad(f, alpha)
    if expected is None:
        expected = integrate.quad(lambda r: math.cos(r) * r**0.5, 0, 1, epsabs=1e-14)[0]
    assert res.value == pytest.approx(expected, rel=1e-12, abs=1e-12)
    assert res.abs_error_estimate >= 0 and res.evaluations > 0


def test_singular_quad_breakpoints_and_length():
    chi = Cutoff(0.3, 0.7)
    res = singular_quad(lambda r: chi(r), 0.5, L=2.0, breakpoints=(0.3, 0.7))
    ref = 2 * 0.3**0.5 + integrate.quad(lambda r: float(chi(r)) * r**-0.5, 0.3, 0.7, epsabs=1e-14)[0]
    assert res.value == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("alpha", [2.0, 2.5])
def test_singular_quad_domain(alpha):
    with pytest.raises(DomainError):
        singular_quad(lambda r: r, alpha)


def test_singular_quad_needs_vanishing_value_beyond_one():
    with pytest.raises(DomainError):
        singular_quad(lambda r: np.ones_like(r), 1.2)
    with pytest.raises(DomainError):
        singular_quad(lambda r: r, 0.5, L=0.0)


def test_quadrature_result_invariants():
    with pytest.raises(ConvergenceError):
        QuadratureResult(math.nan, 0.0, 1)
    with pytest.raises(ValueError):
        QuadratureResult(1.0, -1.0, 1)


@pytest.mark.parametrize("alpha, expected", [(0.5, 2.0), (1.5, -2.0), (1.0, 0.0), (-0.5, 2 / 3)])
def test_i_reg_pure_power(alpha, expected):
    phi = Profile(1.0, alpha)
    assert i_reg(phi, Profile(1.0)) == pytest.approx(expected, abs=1e-10)


def test_i_reg_subcritical_is_plain_integral():
    phi = Profile([1.0, 0.5, -0.3], -0.5, Cutoff(0.4, 0.9))
    rho = Profile([2.0, -1.0])
    ref = integrate.quad(lambda r: float(phi(r) * rho(r)), 0, 1, points=[0.4, 0.9], epsabs=1e-14)[0]
    assert i_reg(phi, rho) == pytest.approx(ref, abs=1e-10)


def test_i_reg_rejects_bad_input():
    with pytest.raises(DomainError):
        i_reg(Profile(1.0, 0.5), Profile(1.0), alpha=2.0)
    with pytest.raises(DomainError):
        i_reg(Profile(1.0, 0.5), Profile(1.0, 0.5))
    with pytest.raises(DomainError):
        i_reg(Profile(1.0, 0.5), Profile(1.0), eps=1.5)


poly = st.lists(st.floats(-2, 2), min_size=1, max_size=4).filter(lambda c: abs(c[0]) > 0.1)


@pytest.mark.parametrize("alpha", [-0.5, 0.5, 1.0, 1.5])
@given(poly, poly)
def test_i_reg_eps_independent(alpha, pc, rc):
    phi = Profile(pc, alpha, Cutoff(0.35, 0.8))
    rho = Profile(rc)
    a = i_reg(phi, rho, eps=0.1)
    b = i_reg(phi, rho, eps=0.3)
    assert abs(a - b) <= 1e-9 * (1 + abs(a))


@given(poly, poly, poly, st.floats(-3, 3), st.floats(-3, 3))
def test_i_reg_linear_in_rho(pc, r1, r2, a, b):
    phi = Profile(pc, 1.3, Cutoff(0.5, 0.9))
    mix = Profile(a * np.polynomial.Polynomial(r1) + b * np.polynomial.Polynomial(r2))
    lhs = i_reg(phi, mix)
    rhs = a * i_reg(phi, Profile(r1)) + b * i_reg(phi, Profile(r2))
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


def test_i_reg_alpha_one_is_laurent_constant():
    smooth = [1.0, -0.4, 0.7]
    cut = Cutoff(0.3, 0.75)
    rho = Profile([0.5, 1.0])
    q0 = 0.5

    def reduced(alpha):
        return i_reg(Profile(smooth, alpha, cut), rho) - q0 / (1 - alpha)

    # symmetric pairs cancel the linear term; extrapolate the remaining h^2 term
    sym = [(reduced(1 + h) + reduced(1 - h)) / 2 for h in (1e-3, 1e-4)]
    extrap = sym[1] + (sym[1] - sym[0]) / 99
    assert extrap == pytest.approx(i_reg(Profile(smooth, 1.0, cut), rho), abs=1e-5)


def test_regularized_pairing_matches_closed_form():
    # q(r) = 1 + r on [0, 1] with alpha = 1.5: int (1 + r) r^-1.5 regularised = -2 + 2
    val = regularized_pairing(lambda r: 1 + r, 1.0, 1.5, eps=0.2)
    assert val == pytest.approx(0.0, abs=1e-12)
