import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, linalg, optimize

from heatcontent.errors import DomainError
from heatcontent.geometry import DIRICHLET, Cutoff, OperatorSpec1D, Profile, RadialFunction, formal_adjoint, robin
from heatcontent.coefficients import c_alpha
from heatcontent.regularize import i_reg
from heatcontent.solver import (
    HeatContentSamples,
    HeatProblem1D,
    apply_operator,
    cn_heat_content,
    eigensystem,
    halfline_heat_content,
    halfline_oracle,
    spectral_expansion,
    spectral_heat_content,
    truncation,
)

EULER_GAMMA = 0.5772156649015329
NEUMANN = robin(0.0)


# ----------------------------------------------------------------------------
# eigensystem


def test_dirichlet_dirichlet_eigenvalues():
    es = eigensystem(OperatorSpec1D(), 3)
    np.testing.assert_allclose(es.lambdas, [np.pi**2, 4 * np.pi**2, 9 * np.pi**2], rtol=1e-13)


def test_dirichlet_modes_are_sines():
    es = eigensystem(OperatorSpec1D(), 4)
    r = np.linspace(0, 1, 17)
    expected = np.sqrt(2) * np.sin(np.outer(r, np.arange(1, 5)) * np.pi)
    # modes are fixed up to sign
    signs = np.sign(es.modes(np.array([0.1]))[0])
    np.testing.assert_allclose(es.modes(r) * signs, expected, atol=1e-12)


def test_neumann_eigenvalues():
    es = eigensystem(OperatorSpec1D(bc_left=NEUMANN, bc_right=NEUMANN), 5)
    np.testing.assert_allclose(es.lambdas, (np.arange(5) * np.pi) ** 2, atol=1e-10, rtol=1e-12)


def _fd_robin_dirichlet(n, S, k):
    # vertex-centred second differences, ghost point for u'(0) + S u(0) = 0,
    # first row symmetrised by the similarity diag(1/sqrt 2, 1, ...)
    h = 1.0 / n
    d = np.full(n, 2.0 / h**2)
    d[0] = 2.0 * (1.0 - h * S) / h**2
    e = np.full(n - 1, -1.0 / h**2)
    e[0] = -math.sqrt(2.0) / h**2
    return linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))[0]


def test_robin_dirichlet_against_dense_matrix():
    es = eigensystem(OperatorSpec1D(bc_left=robin(1.0), bc_right=DIRICHLET), 10)
    fine = _fd_robin_dirichlet(4000, 1.0, 10)
    coarse = _fd_robin_dirichlet(2000, 1.0, 10)
    oracle = fine + (fine - coarse) / 3.0  # the scheme is second order
    np.testing.assert_allclose(es.lambdas, oracle, rtol=1e-6, atol=1e-6)


def test_robin_dirichlet_transcendental_roots():
    # u = sin(k (1 - r)) satisfies u'(0) + u(0) = 0 iff tan k = k; lambda = 0 has u = 1 - r
    es = eigensystem(OperatorSpec1D(bc_left=robin(1.0), bc_right=DIRICHLET), 6)
    roots = [optimize.brentq(lambda k: math.sin(k) - k * math.cos(k), (j + 1) * math.pi, (j + 1.5) * math.pi - 1e-9)
             for j in range(5)]
    assert abs(es.lambdas[0]) < 1e-10
    np.testing.assert_allclose(es.lambdas[1:], np.square(roots), rtol=1e-12)


@pytest.mark.parametrize("S0,S1,b", [(0.5, None, 0.0), (None, 2.0, 1.5), (-0.3, 0.7, -2.0), (None, None, 3.0)])
def test_eigenvalues_strictly_increasing_and_orthonormal(S0, S1, b):
    op = OperatorSpec1D(
        b=[b],
        bc_left=DIRICHLET if S0 is None else robin(S0),
        bc_right=DIRICHLET if S1 is None else robin(S1),
    )
    es = eigensystem(op, 12)
    assert len(es) >= 12
    assert np.all(np.diff(es.lambdas) > 0)
    x, w = np.polynomial.legendre.leggauss(200)
    r = (x + 1) / 2
    M = es.modes(r)
    gram = (M * (w / 2)[:, None]).T @ M
    np.testing.assert_allclose(gram, np.eye(len(es)), atol=1e-10)


def test_eigensystem_rejects_variable_coefficients():
    with pytest.raises(DomainError):
        eigensystem(OperatorSpec1D(b=[0.0, 1.0]), 3)
    with pytest.raises(DomainError):
        eigensystem(OperatorSpec1D(a=[1.0]), 3)


def test_truncation_rule():
    assert truncation(1e-6) == math.ceil(math.sqrt(math.log(1e14) / 1e-6) / math.pi) + 10
    assert 1800 < truncation(1e-6) < 2000


# ----------------------------------------------------------------------------
# spectral heat content


def _sine_problem(op=None):
    mode = RadialFunction(lambda r: math.sqrt(2.0) * np.sin(np.pi * r), 0.0)
    mode.regular_derivative = lambda r, k=0: math.sqrt(2.0) * np.pi**k * np.sin(np.pi * np.asarray(r) + k * np.pi / 2)
    return HeatProblem1D(op or OperatorSpec1D(), mode, mode)


def test_single_mode_heat_content():
    s = spectral_heat_content(_sine_problem(), [0.1])
    assert s.beta[0] == pytest.approx(math.exp(-np.pi**2 * 0.1), rel=1e-12)


def test_spectral_tends_to_regularized_pairing():
    alpha = 0.5
    phi = Profile([1.0])
    rho = Profile([1.0], alpha, Cutoff(0.5, 0.9))
    ireg = i_reg(rho, phi)
    prob = HeatProblem1D(OperatorSpec1D(), rho, phi)
    t = np.array([1e-5, 1e-4, 1e-3])
    s = spectral_heat_content(prob, t)
    # the t**0.25 boundary term dominates the approach to the interior value
    scaled = (s.beta - ireg) / t**0.25
    np.testing.assert_allclose(scaled, c_alpha(alpha).real, rtol=2e-2)


@settings(max_examples=15)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=4), st.lists(st.floats(-1, 1), min_size=2, max_size=4),
       st.sampled_from([0.0, 1.3, -2.0]))
def test_symmetry_self_adjoint(pc, rc, b):
    op = OperatorSpec1D(b=[b], bc_left=robin(0.4), bc_right=DIRICHLET)
    phi, rho = Profile(pc), Profile(rc)
    t = [0.01, 0.1, 0.5]
    a = spectral_heat_content(HeatProblem1D(op, phi, rho), t).beta
    c = spectral_heat_content(HeatProblem1D(op, rho, phi), t).beta
    np.testing.assert_allclose(a, c, rtol=1e-10, atol=1e-12)


def test_duality_variable_potential_cn():
    # a = 0 keeps D self-adjoint, so the dual problem swaps phi and rho
    op = OperatorSpec1D(b=[1.0, -2.0, 0.5], bc_left=robin(0.3), bc_right=DIRICHLET)
    phi = Profile([1.0, 0.4], 0.0, Cutoff(0.5, 0.9))
    rho = Profile([0.5, -1.0, 1.0])
    t = [0.02, 0.05, 0.1]
    a = cn_heat_content(HeatProblem1D(op, phi, rho), t, n=400).beta
    c = cn_heat_content(HeatProblem1D(formal_adjoint(op), rho, phi), t, n=400).beta
    np.testing.assert_allclose(a, c, rtol=1e-9)


def test_semigroup():
    op = OperatorSpec1D(b=[0.7], bc_left=robin(0.5), bc_right=DIRICHLET)
    phi = Profile([1.0], 0.5, Cutoff(0.5, 0.9))
    rho = Profile([1.0, -0.3])
    t1, t2 = 0.01, 0.02
    prob = HeatProblem1D(op, phi, rho)
    direct = spectral_heat_content(prob, [t1 + t2]).beta[0]
    u1 = spectral_expansion(prob, t1).solution(t1)
    step = spectral_heat_content(HeatProblem1D(op, u1, rho), [t2]).beta[0]
    assert step == pytest.approx(direct, rel=1e-8)


def test_mass_decay():
    p = Profile([1.0, 0.5], 0.0, Cutoff(0.3, 0.8))
    s = spectral_heat_content(HeatProblem1D(OperatorSpec1D(), p, p), np.geomspace(1e-4, 1.0, 30))
    assert np.all(np.diff(s.beta) <= 1e-14)


def test_spectral_rejects_preconditions():
    with pytest.raises(DomainError):
        spectral_heat_content(HeatProblem1D(OperatorSpec1D(a=[1.0]), Profile(1.0), Profile(1.0)), [0.1])
    with pytest.raises(DomainError):
        HeatProblem1D(OperatorSpec1D(bc_left=robin(1.0)), Profile([1.0], 1.5), Profile(1.0))
    with pytest.raises(DomainError):
        HeatProblem1D(OperatorSpec1D(), Profile([1.0], 2.0), Profile(1.0))
    with pytest.raises(DomainError):
        HeatProblem1D(OperatorSpec1D(), Profile(1.0), Profile([1.0], 0.5))


# ----------------------------------------------------------------------------
# Crank-Nicolson


def test_cn_single_mode():
    t = [0.01, 0.03, 0.1, 0.3, 1.0]
    cn = cn_heat_content(_sine_problem(), t)
    np.testing.assert_allclose(cn.beta, np.exp(-np.pi**2 * np.asarray(t)), rtol=1e-6)


@pytest.mark.parametrize("alpha", [0.0, 0.5, -0.5])
def test_cn_matches_spectral(alpha):
    op = OperatorSpec1D(b=[0.5], bc_left=DIRICHLET if alpha > 0 else robin(0.6), bc_right=DIRICHLET)
    phi = Profile([1.0, 0.3], alpha, Cutoff(0.5, 0.9))
    rho = Profile([1.0, 0.5])
    prob = HeatProblem1D(op, phi, rho)
    t = np.geomspace(1e-2, 1.0, 5)
    sp = spectral_heat_content(prob, t).beta
    cn = cn_heat_content(prob, t).beta
    np.testing.assert_allclose(cn, sp, rtol=1e-4)


def test_cn_error_estimates_present():
    s = cn_heat_content(_sine_problem(), [0.05, 0.1])
    assert s.method == "CrankNicolson"
    assert np.all(s.err >= 0) and np.all(s.err < 1e-3 * np.abs(s.beta))


def test_cn_rejects_nonintegrable_data():
    with pytest.raises(DomainError):
        cn_heat_content(HeatProblem1D(OperatorSpec1D(), Profile([1.0], 1.2), Profile(1.0)), [0.1])


# ----------------------------------------------------------------------------
# half-line oracle


def test_halfline_log_case():
    prof = Profile([1.0], 1.0)
    t = 1e-6
    value = halfline_oracle(1.0, prof, t) + 0.5 * math.log(t)
    assert value == pytest.approx(EULER_GAMMA / 2 + i_reg(prof, Profile(1.0)), abs=1e-4)


def test_halfline_boundary_coefficient():
    prof = Profile([1.0], 0.5)
    t = 1e-6
    value = (halfline_oracle(0.5, prof, t) - i_reg(prof, Profile(1.0))) / t**0.25
    assert value == pytest.approx(c_alpha(0.5).real, rel=1e-3)


@pytest.mark.parametrize("alpha", [-0.5, 0.5, 1.0, 1.5])
def test_halfline_monotone_and_bounded(alpha):
    prof = Profile([1.0], alpha, Cutoff(0.3, 0.7))
    s = halfline_heat_content(alpha, prof, np.geomspace(1e-5, 10.0, 25))
    # erf(r / (2 sqrt t)) falls as t grows, so the heat content decreases
    assert np.all(np.diff(s.beta) < 0)
    assert s.beta[-1] < 0.2 * s.beta[0] or alpha >= 1
    bound = integrate.quad(lambda r: float(prof(r)), 1e-12, 0.7, points=[0.3], limit=200)[0] if alpha < 1 else math.inf
    assert np.all(s.beta <= bound + 1e-12)


def test_halfline_domain():
    with pytest.raises(DomainError):
        halfline_oracle(2.0, Profile([1.0], 0.5), 0.1)
    with pytest.raises(DomainError):
        halfline_oracle(0.5, Profile([1.0], 0.5), 0.0)


# ----------------------------------------------------------------------------
# apply_operator


def test_apply_operator_examples():
    out = apply_operator(OperatorSpec1D(), Profile([0.0, 0.0, 1.0]))
    np.testing.assert_allclose(out(np.array([0.2, 0.7])), -2.0)
    out = apply_operator(OperatorSpec1D(b=[1.0]), Profile(1.0))
    np.testing.assert_allclose(out(np.array([0.2, 0.7])), -1.0)


def test_apply_operator_mesh_function():
    x = np.linspace(0, 1, 201)
    _, y = apply_operator(OperatorSpec1D(a=[1.0]), (x, x**2))
    np.testing.assert_allclose(y, -(2 + 2 * x), atol=1e-8)


def _panel_integral(f, edges, order=80):
    x, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        r = lo + (hi - lo) * (x + 1) / 2
        total += (hi - lo) / 2 * float(np.dot(w, f(r)))
    return total


@settings(max_examples=20)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=3), st.lists(st.floats(-2, 2), min_size=1, max_size=3),
       st.lists(st.floats(-1, 1), min_size=1, max_size=3), st.lists(st.floats(-1, 1), min_size=1, max_size=3))
def test_adjoint_consistency(a, b, pc, rc):
    op = OperatorSpec1D(a=a, b=b)
    # a double zero at r = 0 and the cutoff near r = 1 kill every boundary term
    phi = Profile([0.0, 0.0, 1.0, *pc], 0.0, Cutoff(0.3, 0.7))
    rho = Profile([0.0, 0.0, 1.0, *rc], 0.0, Cutoff(0.4, 0.8))
    d_phi = apply_operator(op, phi)
    d_rho = apply_operator(formal_adjoint(op), rho)
    edges = [0.0, 0.3, 0.4, 0.7, 0.8]
    lhs = _panel_integral(lambda r: d_phi(r) * rho(r), edges)
    rhs = _panel_integral(lambda r: phi(r) * d_rho(r), edges)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


# ----------------------------------------------------------------------------
# samples


def test_samples_csv_round_trip():
    s = HeatContentSamples([1e-6, 1e-3, 0.1], [1.0 / 3.0, math.pi, -2.5e-7], [1e-14, 0.0, 3e-9])
    back = HeatContentSamples.from_csv(s.to_csv())
    assert back.entries == s.entries
    assert s.to_csv().startswith("t,beta,err\n")


@pytest.mark.parametrize("t,beta,err", [
    ([0.1, 0.1], [1, 1], [0, 0]),
    ([0.0, 0.1], [1, 1], [0, 0]),
    ([0.1, 0.2], [1, 1], [0, -1]),
    ([0.1, 0.2], [1, float("nan")], [0, 0]),
])
def test_samples_invariants(t, beta, err):
    with pytest.raises(DomainError):
        HeatContentSamples(t, beta, err)
