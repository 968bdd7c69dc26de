"""Heat content of one-dimensional problems on ``[0, 1]``.

Three independent routes:

* ``spectral_heat_content``: eigenfunction expansion for ``D = -(d^2 + b)``
  with constant ``b`` and any Dirichlet/Robin combination;
* ``cn_heat_content``: Crank-Nicolson finite elements for arbitrary
  polynomial ``a, b`` (initial data must be integrable, ``alpha < 1``);
* ``halfline_oracle``: the closed-form half-line solution, exact up to
  exponentially small terms.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .errors import ConvergenceError, DomainError
from .geometry import DIRICHLET, OperatorSpec1D, Profile, RadialFunction, as_poly, robin
from .regularize import _jacobi_rule, _smooth_quad, singular_quad
from .specfun import erf

SPECTRAL = "Spectral"
CRANK_NICOLSON = "CrankNicolson"
HALFLINE = "HalflineOracle"
METHODS = (SPECTRAL, CRANK_NICOLSON, HALFLINE)

#: tail tolerance in the spectral truncation rule
SPECTRAL_TAU = 1e-14


# --------------------------------------------------------------------------
# problem and result types


@dataclass
class HeatProblem1D:
    """Initial temperature ``phi`` (exponent ``alpha``) and specific heat ``rho`` under ``op``."""

    op: OperatorSpec1D
    phi: RadialFunction
    rho: RadialFunction
    alpha: float | None = None

    def __post_init__(self):
        if self.alpha is None:
            self.alpha = self.phi.alpha
        self.alpha = float(self.alpha)
        if self.alpha != self.phi.alpha:
            raise DomainError("problem alpha disagrees with phi.alpha")
        if self.rho.alpha != 0.0:
            raise DomainError("the specific heat must be smooth (alpha = 0)")
        if self.op.bc_left.is_dirichlet:
            if not self.alpha < 2:
                raise DomainError("a Dirichlet end needs alpha < 2")
        elif not self.alpha < 1:
            raise DomainError("a Robin end needs alpha < 1")

    @property
    def breakpoints(self):
        pts = set(self.phi.breakpoints) | set(self.rho.breakpoints)
        return tuple(sorted(p for p in pts if 0 < p < 1))


@dataclass
class HeatContentSamples:
    """Samples ``(t, beta, err)`` of a heat content, ``t`` strictly increasing."""

    t: np.ndarray
    beta: np.ndarray
    err: np.ndarray
    method: str = SPECTRAL

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        self.err = np.asarray(self.err, dtype=float)
        if not (self.t.shape == self.beta.shape == self.err.shape) or self.t.ndim != 1:
            raise DomainError("t, beta and err must be 1-d arrays of equal length")
        if self.t.size and (np.any(self.t <= 0) or np.any(np.diff(self.t) <= 0)):
            raise DomainError("sample times must be positive and strictly increasing")
        if np.any(self.err < 0) or not np.all(np.isfinite(self.beta)):
            raise DomainError("errors must be non-negative and values finite")
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")

    @property
    def entries(self):
        return list(zip(self.t.tolist(), self.beta.tolist(), self.err.tolist()))

    def __len__(self):
        return self.t.size

    def scaled(self, factor):
        return HeatContentSamples(self.t, self.beta * factor, self.err * abs(factor), self.method)

    def to_csv(self):
        """CSV text with header ``t,beta,err``, 17 significant digits, LF endings."""
        lines = ["t,beta,err"]
        lines += [f"{t:.17g},{b:.17g},{e:.17g}" for t, b, e in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text, method=SPECTRAL):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["t", "beta", "err"]:
            raise DomainError("CSV must start with the header t,beta,err")
        data = np.array([[float(c) for c in row] for row in rows[1:] if row], dtype=float)
        if data.size == 0:
            data = np.zeros((0, 3))
        return cls(data[:, 0], data[:, 1], data[:, 2], method)


def _as_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("t_grid must be a non-empty list")
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be positive and strictly increasing")
    return t


# --------------------------------------------------------------------------
# operators on functions


def apply_operator(op: OperatorSpec1D, f):
    """Apply ``-(f'' + a f' + b f)``.

    ``f`` may be a Profile (polynomial profiles are differentiated exactly,
    the result is a Profile when it stays polynomial), another radial
    function exposing ``regular_derivative``, or a mesh function given as a
    pair ``(x, values)`` (second-order finite differences).
    """
    if isinstance(f, tuple):
        x, y = (np.asarray(v, dtype=float) for v in f)
        d1 = np.gradient(y, x, edge_order=2)
        d2 = np.gradient(d1, x, edge_order=2)
        return x, -(d2 + op.a(x) * d1 + op.b(x) * y)

    alpha = f.alpha
    if isinstance(f, Profile) and f.cutoff is None and alpha == 0.0:
        p = f.smooth
        out = -(p.deriv(2) + op.a * p.deriv() + op.b * p)
        return Profile(out.trim(), 0.0) if out.degree() <= 8 else _poly_radial(out)

    def g(r, k):
        return f.regular_derivative(r, k)

    def regular(r):
        r = np.asarray(r, dtype=float)
        g0, g1, g2 = g(r, 0), g(r, 1), g(r, 2)
        if alpha == 0.0:
            return -(g2 + op.a(r) * g1 + op.b(r) * g0)
        # f = g r^-alpha, so r^2 f'' = r^-alpha (r^2 g'' - 2 alpha r g' + alpha(alpha+1) g)
        r2f2 = r * r * g2 - 2 * alpha * r * g1 + alpha * (alpha + 1) * g0
        r2f1 = r * r * g1 - alpha * r * g0
        return -(r2f2 + op.a(r) * r2f1 + op.b(r) * r * r * g0)

    return _DerivedRadial(regular, alpha + (2.0 if alpha else 0.0), f.breakpoints, f, op)


class _DerivedRadial(RadialFunction):
    # result of apply_operator on a non-polynomial profile; differentiable again
    def __init__(self, regular, alpha, breakpoints, parent, op):
        super().__init__(regular, alpha, breakpoints)
        self._parent = parent
        self._op = op

    def regular_derivative(self, r, order=0):
        if order == 0:
            return self.regular(r)
        if self.alpha != 0.0:
            raise DomainError("derivatives of singular derived profiles are not provided")
        # differentiate -(g'' + a g' + b g) by Leibniz, needs parent derivatives up to order+2
        r = np.asarray(r, dtype=float)
        p = self._parent
        a, b = self._op.a, self._op.b
        total = -p.regular_derivative(r, order + 2)
        for j in range(order + 1):
            c = math.comb(order, j)
            total = total - c * (a.deriv(j)(r) * p.regular_derivative(r, order - j + 1)
                                 + b.deriv(j)(r) * p.regular_derivative(r, order - j))
        return total


def _poly_radial(poly):
    poly = as_poly(poly)

    class _P(RadialFunction):
        def regular_derivative(self, r, order=0):
            return poly.deriv(order)(np.asarray(r, dtype=float)) if order else poly(r)

    return _P(lambda r: poly(r), 0.0, ())


def factorized_pair(b, phi: RadialFunction, rho: RadialFunction):
    """Operators and data for the factorisation ``D1 = A*A``, ``D2 = A A*`` with ``A = d + b``.

    Returns ``(problem1, problem2)``: ``problem1`` is ``(phi, rho)`` under
    ``D1 = -(d^2 + b' - b^2)`` with the Robin conditions ``A u = 0`` at both
    ends; ``problem2`` is ``(A phi, A rho)`` under ``D2 = -(d^2 - b' - b^2)``
    with Dirichlet conditions.
    """
    b = as_poly(b)
    op1 = OperatorSpec1D(a=[0.0], b=b.deriv() - b * b, bc_left=robin(b(0.0) + 0.0), bc_right=robin(0.0 - b(1.0)))
    op2 = OperatorSpec1D(a=[0.0], b=-b.deriv() - b * b, bc_left=DIRICHLET, bc_right=DIRICHLET)

    def apply_a(f):
        al = f.alpha

        def regular(r):
            r = np.asarray(r, dtype=float)
            g0 = f.regular_derivative(r, 0)
            g1 = f.regular_derivative(r, 1)
            # A(g r^-al) = r^-(al+1) (r g' - al g + r b g)
            if al == 0.0:
                return g1 + b(r) * g0
            return r * g1 - al * g0 + r * b(r) * g0

        return RadialFunction(regular, al + 1.0 if al else 0.0, f.breakpoints)

    return (HeatProblem1D(op1, phi, rho), HeatProblem1D(op2, apply_a(phi), apply_a(rho)))


# --------------------------------------------------------------------------
# eigensystem for constant coefficients


def _c_sn(mu, r):
    # C = cos(sqrt(mu) r), Sn = sin(sqrt(mu) r)/sqrt(mu), analytic in mu
    mu = np.asarray(mu, dtype=float)
    r = np.asarray(r, dtype=float)
    shape = np.broadcast_shapes(mu.shape, r.shape)
    mu = np.broadcast_to(mu, shape)
    r = np.broadcast_to(r, shape)
    c = np.empty(shape)
    s = np.empty(shape)
    pos = mu > 0
    neg = mu < 0
    zer = ~(pos | neg)
    k = np.sqrt(np.where(pos, mu, 1.0))
    c[pos] = np.cos(k[pos] * r[pos])
    s[pos] = np.sin(k[pos] * r[pos]) / k[pos]
    q = np.sqrt(np.where(neg, -mu, 1.0))
    c[neg] = np.cosh(q[neg] * r[neg])
    s[neg] = np.sinh(q[neg] * r[neg]) / q[neg]
    c[zer] = 1.0
    s[zer] = r[zer]
    return c, s


def _sinc_mu(mu, r):
    # Sn(mu, r) / r, finite at r = 0
    mu = np.asarray(mu, dtype=float)
    r = np.asarray(r, dtype=float)
    shape = np.broadcast_shapes(mu.shape, r.shape)
    mu = np.broadcast_to(mu, shape)
    r = np.broadcast_to(r, shape)
    out = np.ones(shape)
    pos = mu > 0
    neg = mu < 0
    k = np.sqrt(np.where(pos, mu, 0.0))
    out[pos] = np.sinc(k[pos] * r[pos] / np.pi)
    q = np.sqrt(np.where(neg, -mu, 0.0))
    x = q[neg] * r[neg]
    out[neg] = np.where(x > 1e-8, np.sinh(x) / np.where(x > 1e-8, x, 1.0), 1.0)
    return out


@dataclass
class EigenSystem:
    """Eigenpairs of ``-(d^2 + b)`` on ``[0, 1]``.

    Mode ``n`` is ``A[n] C(mu_n, r) + B[n] Sn(mu_n, r)`` with ``mu = lambda + b``;
    ``norm[n]`` is the L2 norm of the un-normalised mode (the stored
    ``A, B`` are already normalised).
    """

    lambdas: np.ndarray
    mu: np.ndarray
    A: np.ndarray
    B: np.ndarray
    norm: np.ndarray
    bc_left: str
    bc_right: str

    @property
    def pairs(self):
        return [(float(l), float(n), i) for i, (l, n) in enumerate(zip(self.lambdas, self.norm))]

    def __len__(self):
        return self.lambdas.size

    def modes(self, r, idx=slice(None)):
        """Normalised mode values, shape ``(len(r), n_modes)``."""
        r = np.asarray(r, dtype=float)
        mu, A, B = self.mu[idx], self.A[idx], self.B[idx]
        if mu.size and np.all(mu > 0):
            k = np.sqrt(mu)
            kr = np.multiply.outer(r, k)
            out = np.sin(kr) * (B / k)
            if np.any(A != 0):
                out += np.cos(kr) * A
            return out
        c, s = _c_sn(mu[None, :], r[:, None])
        return A * c + B * s

    def modes_over_r(self, r, idx=slice(None)):
        """Mode values divided by ``r``; only for a Dirichlet left end."""
        if self.bc_left != "dirichlet":
            raise DomainError("modes vanish at r = 0 only for a Dirichlet left end")
        r = np.asarray(r, dtype=float)[:, None]
        return self.B[idx] * _sinc_mu(self.mu[idx][None, :], r)


def _char(mu, s0, s1):
    # left boundary condition built into (A, B); return the right-end residual
    if s0 is None:
        A, B = 0.0, 1.0
    else:
        A, B = 1.0, -s0
    c, s = _c_sn(mu, 1.0)
    u = A * c + B * s
    du = -A * mu * s + B * c
    if s1 is None:
        return u
    return -du + s1 * u


def _norm_sq(mu, A, B):
    if mu >= 1.0:
        k = math.sqrt(mu)
        bp = B / k
        s2 = math.sin(2 * k) / (4 * k)
        return A * A * (0.5 + s2) + bp * bp * (0.5 - s2) + A * bp * math.sin(k) ** 2 / k
    x, w = np.polynomial.legendre.leggauss(64)
    r = (x + 1) / 2
    c, s = _c_sn(mu, r)
    return float(0.5 * np.dot(w, (A * c + B * s) ** 2))


def eigensystem(op: OperatorSpec1D, N: int) -> EigenSystem:
    """First ``N`` eigenpairs of a constant-coefficient operator (``a = 0``, ``b`` constant)."""
    if op.a.degree() != 0 or op.a.coef[0] != 0.0 or op.b.degree() != 0:
        raise DomainError("eigensystem needs a = 0 and constant b")
    if N < 1:
        raise DomainError("N must be positive")
    b0 = float(op.b.coef[0])
    s0, s1 = op.plain_robin()

    def solve(fn, lo, hi):
        try:
            return optimize.brentq(fn, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        except (RuntimeError, ValueError) as exc:
            raise ConvergenceError(f"eigenvalue bracket [{lo}, {hi}] did not close: {exc}") from exc

    def f_scalar(mu):
        # scalar twin of _char for the root polisher
        if mu > 0:
            k = math.sqrt(mu)
            c, sn = math.cos(k), math.sin(k) / k
        elif mu < 0:
            q = math.sqrt(-mu)
            c, sn = math.cosh(q), math.sinh(q) / q
        else:
            c, sn = 1.0, 1.0
        A, B = (0.0, 1.0) if s0 is None else (1.0, -s0)
        u = A * c + B * sn
        if s1 is None:
            return u
        return -(-A * mu * sn + B * c) + s1 * u

    mus = []
    # negative mu: at most two roots, one per Robin end
    big = max(abs(s0 or 0.0), abs(s1 or 0.0), 1.0)
    kap = np.linspace(0.0, 2 * big + 5.0, 4001)[1:]
    vals = _char(-kap * kap, s0, s1)
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0][::-1]:
        q = solve(lambda q: f_scalar(-q * q), kap[i], kap[i + 1])
        mus.append(-q * q)
    scale0 = 1.0 + abs(s0 or 0.0) + abs(s1 or 0.0)
    if abs(f_scalar(0.0)) <= 1e-14 * scale0:
        mus.append(0.0)
    # positive mu, scanned in k on a grid offset from multiples of pi
    step = math.pi / 64
    n_pts = 64 * (N + 4)
    start = 0
    while len(mus) < N:
        k = (np.arange(start, start + n_pts) + 0.5) * step
        if start:
            k = np.concatenate([[(start - 0.5) * step], k])
        v = _char(k * k, s0, s1)
        for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
            kr = solve(lambda kk: f_scalar(kk * kk), k[i], k[i + 1])
            mus.append(kr * kr)
            if len(mus) >= N:
                break
        start += n_pts
        if start > 64 * (4 * N + 100):
            raise ConvergenceError("eigenvalue scan did not find enough roots")
    mu = np.array(mus[:N])
    if s0 is None:
        A0, B0 = 0.0, 1.0
    else:
        A0, B0 = 1.0, -s0
    norms = np.array([math.sqrt(_norm_sq(m, A0, B0)) for m in mu])
    return EigenSystem(
        lambdas=mu - b0, mu=mu,
        A=np.full(N, A0) / norms, B=np.full(N, B0) / norms, norm=norms,
        bc_left=op.bc_left.kind, bc_right=op.bc_right.kind,
    )


def truncation(t, tau=SPECTRAL_TAU):
    """Number of modes keeping the spectral tail below ``tau`` at time ``t``."""
    return int(math.ceil(math.sqrt(math.log(1.0 / tau) / t) / math.pi)) + 10


# --------------------------------------------------------------------------
# spectral heat content

_GL_POINTS = 12
_FIRST_JACOBI = 24
_CHUNK = 256


def _panel_edges(n_panels, breakpoints):
    edges = set(np.linspace(0.0, 1.0, n_panels + 1).tolist())
    edges.update(breakpoints)
    return np.array(sorted(edges))


def mode_coefficients(es: EigenSystem, f: RadialFunction, n_panels=None):
    """``<f, u_n>`` for every mode of ``es``.

    Composite Gauss-Legendre panels, plus a Gauss-Jacobi first panel that
    absorbs ``r**(-alpha)``; for ``alpha >= 1`` one power of ``r`` is moved
    from the mode into the weight.
    """
    N = len(es)
    n_panels = n_panels or max(64, N)
    end = float(getattr(f, "support_end", 1.0))
    edges = _panel_edges(n_panels, [p for p in f.breakpoints if 0 < p < 1])
    edges = edges[edges <= end]
    x, w = np.polynomial.legendre.leggauss(_GL_POINTS)
    lo, hi = edges[1:-1], edges[2:]
    r = ((hi - lo)[:, None] * (x + 1) / 2 + lo[:, None]).ravel()
    wr = ((hi - lo)[:, None] / 2 * w).ravel()
    fr = np.asarray(f(r), dtype=float) * wr

    alpha = f.alpha
    d = edges[1]
    if alpha >= 1:
        beta = alpha - 1.0
    else:
        beta = alpha
    xj, wj = _jacobi_rule(_FIRST_JACOBI, -beta)
    rj = d * (xj + 1) / 2
    wj = wj * (d / 2) ** (1 - beta) * np.asarray(f.regular(rj), dtype=float)

    out = np.empty(N)
    for s in range(0, N, _CHUNK):
        idx = slice(s, min(N, s + _CHUNK))
        acc = fr @ es.modes(r, idx)
        if alpha >= 1:
            acc += wj @ es.modes_over_r(rj, idx)
        else:
            acc += wj @ es.modes(rj, idx)
        out[idx] = acc
    return out


def _check_spectral(problem: HeatProblem1D):
    op = problem.op
    if op.a.degree() != 0 or op.a.coef[0] != 0.0 or op.b.degree() != 0:
        raise DomainError("the spectral solver needs a = 0 and constant b")
    if problem.alpha >= 1 and not op.bc_left.is_dirichlet:
        raise DomainError("alpha >= 1 needs a Dirichlet end at r = 0")


@dataclass
class SpectralExpansion:
    """Coefficients of ``u(t) = sum exp(-lambda_n t) c_n u_n`` and of ``<u_n, rho>``."""

    es: EigenSystem
    c_phi: np.ndarray
    c_rho: np.ndarray

    def heat_content(self, t):
        terms = np.exp(-np.outer(np.atleast_1d(t), self.es.lambdas)) * (self.c_phi * self.c_rho)
        beta = terms.sum(axis=1)
        # truncation: size of the last retained term, roundoff: accumulated magnitude
        err = np.abs(terms[:, -1]) + 1e-15 * np.abs(terms).sum(axis=1)
        return beta, err

    def solution(self, t):
        """The temperature ``u(.; t)`` as a smooth radial function."""
        coef = np.exp(-self.es.lambdas * t) * self.c_phi
        es = self.es

        def u(r):
            r = np.atleast_1d(np.asarray(r, dtype=float))
            out = np.zeros(r.shape)
            for s in range(0, len(es), _CHUNK):
                idx = slice(s, min(len(es), s + _CHUNK))
                out += es.modes(r, idx) @ coef[idx]
            return out

        return RadialFunction(u, 0.0, ())


def spectral_expansion(problem: HeatProblem1D, t_min: float) -> SpectralExpansion:
    _check_spectral(problem)
    N = truncation(t_min)
    es = eigensystem(problem.op, N)
    return SpectralExpansion(es, mode_coefficients(es, problem.phi), mode_coefficients(es, problem.rho))


def spectral_heat_content(problem: HeatProblem1D, t_grid) -> HeatContentSamples:
    """``beta(t) = sum_n exp(-lambda_n t) <phi, u_n> <u_n, rho>`` on ``t_grid``.

    The mode count is set by the smallest time so the tail stays below
    ``SPECTRAL_TAU``; every time uses all computed modes.
    """
    t = _as_grid(t_grid)
    exp = spectral_expansion(problem, float(t[0]))
    beta, err = exp.heat_content(t)
    return HeatContentSamples(t, beta, err, SPECTRAL)


def product_heat_content(problem: HeatProblem1D, t_grid, circle_phi=(1.0,), circle_rho=(1.0,)):
    """Heat content on ``[0, 1]`` times a unit circle by a double spectral sum.

    ``circle_phi`` and ``circle_rho`` are Fourier coefficients ``(m = 0, 1, ...)``
    of cosine series on the circle factor. Returns the samples and the
    closed-factor heat content ``2 pi sum a_m b_m / (1 + [m > 0])`` at ``t = 0``
    (the circle contribution at time ``t`` includes ``exp(-m^2 t)``).
    """
    t = _as_grid(t_grid)
    exp = spectral_expansion(problem, float(t[0]))
    a = np.asarray(circle_phi, dtype=float)
    b = np.asarray(circle_rho, dtype=float)
    m = np.arange(min(a.size, b.size))
    # integral over the circle of cos(m y) cos(m y): 2 pi for m = 0, pi otherwise
    circle_w = np.where(m == 0, 2 * np.pi, np.pi) * a[: m.size] * b[: m.size]
    lam = exp.es.lambdas[None, :] + (m**2)[:, None]
    pair = exp.c_phi * exp.c_rho
    beta = np.array([float(np.sum(circle_w[:, None] * np.exp(-lam * tt) * pair)) for tt in t])
    err = 1e-14 * np.abs(beta) + 1e-15
    return HeatContentSamples(t, beta, err, SPECTRAL), float(circle_w.sum())


# --------------------------------------------------------------------------
# half-line oracle

_ERF_CUT = 6.5  # erfc(6.5) < 4e-20


def halfline_oracle(alpha, profile: RadialFunction, t) -> float:
    """``int_0^1 erf(r / (2 sqrt t)) g(r) r**(-alpha) dr`` with ``g = profile.regular``.

    This is the heat content of the half-line problem with initial
    temperature 1 and specific heat ``g r**(-alpha)``; the ``erf`` factor
    vanishes linearly at 0, so any ``alpha < 2`` is admissible.
    """
    alpha = float(alpha)
    if not alpha < 2:
        raise DomainError("halfline_oracle needs alpha < 2")
    if not t > 0:
        raise DomainError("halfline_oracle needs t > 0")
    sig = 2.0 * math.sqrt(t)
    R = min(1.0, _ERF_CUT * sig)
    bps = [p for p in profile.breakpoints if 0 < p < 1]
    smax = R / sig
    s_bps = sorted({min(1.0, smax / 2)} | {p / sig for p in bps if p < R})

    def inner(s):
        s = np.asarray(s, dtype=float)
        return erf(s) * profile.regular(sig * s)

    val = sig ** (1 - alpha) * singular_quad(inner, alpha, smax, s_bps).value
    if R < 1.0:
        val += _smooth_quad(lambda r: erf(r / sig) * profile(r), R, 1.0, bps)[0]
    return float(val)


def halfline_heat_content(alpha, profile, t_grid) -> HeatContentSamples:
    t = _as_grid(t_grid)
    beta = np.array([halfline_oracle(alpha, profile, tt) for tt in t])
    return HeatContentSamples(t, beta, 1e-14 * np.maximum(np.abs(beta), 1.0), HALFLINE)


# --------------------------------------------------------------------------
# Crank-Nicolson finite elements

CN_NODES = 2000
_CN_GAUSS = 6


@dataclass
class _FemSystem:
    x: np.ndarray
    free: np.ndarray
    M: np.ndarray  # banded (3, n) over free nodes
    K: np.ndarray
    load_phi: np.ndarray
    load_rho: np.ndarray


def _tridiag_to_banded(lower, diag, upper):
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return ab


def _load_vector(x, f: RadialFunction):
    # int f psi_j over each element; Gauss-Jacobi on the first element
    n_el = x.size - 1
    h = np.diff(x)
    g, w = np.polynomial.legendre.leggauss(_CN_GAUSS)
    xq = x[:-1, None] + h[:, None] * (g + 1) / 2
    wq = h[:, None] / 2 * w
    lam = (xq - x[:-1, None]) / h[:, None]
    fq = np.asarray(f(xq.ravel()), dtype=float).reshape(xq.shape) * wq
    left = (fq * (1 - lam)).sum(axis=1)
    right = (fq * lam).sum(axis=1)
    # first element carries the singular weight
    xj, wj = _jacobi_rule(24, -f.alpha)
    rj = h[0] * (xj + 1) / 2
    wj = wj * (h[0] / 2) ** (1 - f.alpha) * np.asarray(f.regular(rj), dtype=float)
    left[0] = float(np.dot(wj, 1 - rj / h[0]))
    right[0] = float(np.dot(wj, rj / h[0]))
    F = np.zeros(n_el + 1)
    F[:-1] += left
    F[1:] += right
    return F


def _assemble(problem: HeatProblem1D, n: int):
    op = problem.op
    x = np.linspace(0.0, 1.0, n + 1) ** 3
    for p in problem.breakpoints:
        # snap the nearest node onto each breakpoint of the data
        i = int(np.argmin(np.abs(x - p)))
        if 0 < i < n:
            x[i] = p
    x = np.sort(x)
    h = np.diff(x)
    g, w = np.polynomial.legendre.leggauss(_CN_GAUSS)
    xq = x[:-1, None] + h[:, None] * (g + 1) / 2
    wq = h[:, None] / 2 * w
    lam = (xq - x[:-1, None]) / h[:, None]
    aq = op.a(xq)
    bq = op.b(xq)
    # local matrices for basis (1 - lam, lam); derivatives (-1/h, 1/h)
    m00 = (wq * (1 - lam) ** 2).sum(1)
    m01 = (wq * (1 - lam) * lam).sum(1)
    m11 = (wq * lam**2).sum(1)
    b00 = (wq * bq * (1 - lam) ** 2).sum(1)
    b01 = (wq * bq * (1 - lam) * lam).sum(1)
    b11 = (wq * bq * lam**2).sum(1)
    # -int a u' v, with u' = (-1/h, 1/h)
    a0 = (wq * aq * (1 - lam)).sum(1) / h  # int a psi_0 / h
    a1 = (wq * aq * lam).sum(1) / h
    N = n + 1
    Md = np.zeros(N)
    Ml = np.zeros(n)
    Mu = np.zeros(n)
    Kd = np.zeros(N)
    Kl = np.zeros(n)  # K[i+1, i]
    Ku = np.zeros(n)  # K[i, i+1]
    Md[:-1] += m00
    Md[1:] += m11
    Ml += m01
    Mu += m01
    inv_h = 1.0 / h
    # K[i, j] = B(psi_j, psi_i): int psi_j' psi_i' - a psi_j' psi_i - b psi_j psi_i
    Kd[:-1] += inv_h - (-a0) - b00
    Kd[1:] += inv_h - a1 - b11
    Ku += -inv_h - a0 - b01  # row i (test psi_i = 1-lam), column i+1 (trial derivative +1/h)
    Kl += -inv_h - (-a1) - b01  # row i+1 (test lam), column i (trial derivative -1/h)
    s0, s1 = op.plain_robin()
    if s0 is not None:
        Kd[0] -= s0
    if s1 is not None:
        Kd[-1] -= s1
    free = np.ones(N, dtype=bool)
    if s0 is None:
        free[0] = False
    if s1 is None:
        free[-1] = False
    idx = np.nonzero(free)[0]
    sl = slice(idx[0], idx[-1] + 1)
    lo = slice(idx[0], idx[-1])
    M = _tridiag_to_banded(Ml[lo], Md[sl], Mu[lo])
    K = _tridiag_to_banded(Kl[lo], Kd[sl], Ku[lo])
    F = _load_vector(x, problem.phi)[free]
    G = _load_vector(x, problem.rho)[free]
    return _FemSystem(x, free, M, K, F, G)


def _banded_matvec(ab, v):
    out = ab[1] * v
    out[:-1] += ab[0, 1:] * v[1:]
    out[1:] += ab[2, :-1] * v[:-1]
    return out


def _time_nodes(t, ratio, h0):
    nodes = [h0 * (k + 1) for k in range(4)]  # implicit Euler start-up
    cur = nodes[-1]
    if cur >= t[0]:
        raise DomainError("first sample time is too small for the start-up steps")
    for target in t:
        m = max(1, int(math.ceil(math.log(target / cur) / math.log(ratio))))
        q = (target / cur) ** (1.0 / m)
        for _ in range(m):
            cur = cur * q
            nodes.append(cur)
        nodes[-1] = target
        cur = target
    return np.array(nodes)


def _march(fem: _FemSystem, t, ratio, h0):
    M, K = fem.M, fem.K
    u = linalg.solve_banded((1, 1), M, fem.load_phi)
    nodes = _time_nodes(t, ratio, h0)
    targets = set(t.tolist())
    out = {}
    prev = 0.0
    for i, tn in enumerate(nodes):
        dt = tn - prev
        if i < 4:
            A = M + dt * K
            u = linalg.solve_banded((1, 1), A, _banded_matvec(M, u))
        else:
            A = M + 0.5 * dt * K
            rhs = _banded_matvec(M, u) - 0.5 * dt * _banded_matvec(K, u)
            u = linalg.solve_banded((1, 1), A, rhs)
        prev = tn
        if tn in targets:
            out[tn] = float(fem.load_rho @ u)
    return np.array([out[tt] for tt in t.tolist()])


def _cn_run(problem, t, n, ratio):
    fem = _assemble(problem, n)
    h0 = float(t[0]) * 1e-4
    coarse = _march(fem, t, ratio, h0)
    fine = _march(fem, t, math.sqrt(ratio), h0 / 2)
    # second order in time: extrapolate, and keep the raw difference as the estimate
    return fine + (fine - coarse) / 3.0, np.abs(fine - coarse) / 3.0


def cn_heat_content(problem: HeatProblem1D, t_grid, n=CN_NODES, ratio=1.01, rel_tol=1e-3) -> HeatContentSamples:
    """Crank-Nicolson heat content on a graded finite-element mesh.

    Linear elements on ``x_i = (i/n)**3``, initial data by L2 projection,
    four implicit-Euler start-up steps, then geometric Crank-Nicolson steps
    with growth ``ratio``. Each mesh is run twice with halved steps and the
    pair combined by Richardson extrapolation in time; the meshes with ``n``
    and ``n/2`` elements are then combined the same way in space. The
    reported error is the larger of the two corrections.
    """
    t = _as_grid(t_grid)
    if not problem.alpha < 1:
        raise DomainError("Crank-Nicolson needs alpha < 1")
    fine, err_t = _cn_run(problem, t, n, ratio)
    coarse, _ = _cn_run(problem, t, n // 2, ratio)
    err_x = np.abs(fine - coarse) / 3.0
    best = fine + (fine - coarse) / 3.0
    err = np.maximum(err_t, err_x)
    bad = err > rel_tol * np.maximum(np.abs(best), 1e-300)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ConvergenceError(
            f"step-halving disagreement {err[i]:.3g} exceeds {rel_tol:g} relative at t={t[i]:g}"
        )
    return HeatContentSamples(t, best, err, CRANK_NICOLSON)
