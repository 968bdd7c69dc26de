"""Regularised interior pairing and quadrature with an ``r**(-alpha)`` endpoint singularity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg

from .errors import ConvergenceError, DomainError
from .geometry import Profile

#: below this distance from alpha = 1 the logarithmic regularisation is used
LOG_BRANCH = 1e-10

_JACOBI_ORDERS = (8, 12, 16, 20, 24, 32, 48, 64)
_REL_TOL = 2e-13
_ABS_TOL = 1e-14


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ConvergenceError("quadrature produced a non-finite value")
        if self.abs_error_estimate < 0:
            raise ValueError("error estimate must be non-negative")

    def __float__(self):
        return float(self.value)


@lru_cache(maxsize=64)
def _jacobi_rule(n, beta):
    """Nodes and weights on ``[-1, 1]`` for the weight ``(1 + x)**beta``.

    Golub-Welsch on the Jacobi matrix. scipy's ``roots_jacobi`` loses
    several digits in the nodes once ``beta`` approaches -1, which the
    symmetric tridiagonal eigensolver does not.
    """
    k = np.arange(n, dtype=float)
    s = 2.0 * k + beta
    diag = np.empty(n)
    diag[0] = beta / (beta + 2.0)
    diag[1:] = beta * beta / (s[1:] * (s[1:] + 2.0))
    kk, ss = k[1:], s[1:]
    off = np.sqrt(4.0 * kk * kk * (kk + beta) ** 2 / (ss * ss * (ss + 1.0) * (ss - 1.0)))
    x, vec = linalg.eigh_tridiagonal(diag, off)
    mu0 = 2.0 ** (beta + 1.0) / (beta + 1.0)
    return x, mu0 * vec[0] ** 2


def jacobi_panel(f, alpha, delta, noise=None):
    """``int_0^delta f(r) r**(-alpha) dr`` by Gauss-Jacobi rules of increasing order.

    Returns ``(value, error_estimate, evaluations)``. ``alpha < 1``.
    ``noise(r)`` optionally bounds the rounding error in ``f(r)``; changes
    below its integrated size count as converged.
    """
    prev = None
    evals = 0
    scale = (delta / 2.0) ** (1.0 - alpha)
    for n in _JACOBI_ORDERS:
        x, w = _jacobi_rule(n, -alpha)
        r = delta * (1.0 + x) / 2.0
        fr = np.asarray(f(r), dtype=float)
        val = scale * float(np.dot(w, fr))
        # rounding is relative to the integral of |f|, not to a possibly cancelled value
        mag = scale * float(np.dot(w, np.abs(fr)))
        if noise is not None:
            mag += scale * float(np.dot(w, noise(r))) / _REL_TOL
        evals += n
        if prev is not None:
            err = abs(val - prev)
            if err <= max(_ABS_TOL, _REL_TOL * mag):
                return val, err, evals
        prev = val
    raise ConvergenceError(f"Gauss-Jacobi panel did not converge (last change {err:.3g})")


def _smooth_quad(g, a, b, points=()):
    pts = sorted(p for p in points if a < p < b)
    edges = [a, *pts, b]
    total = 0.0
    err = 0.0
    evals = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e, info = integrate.quad(
            lambda r: float(g(r)), lo, hi, epsabs=_ABS_TOL, epsrel=_REL_TOL,
            limit=200, full_output=True,
        )[:3]
        total += val
        err += e
        evals += info["neval"]
    return total, err, evals


def singular_quad(f, alpha, L=1.0, breakpoints=()) -> QuadratureResult:
    """Evaluate ``int_0^L f(r) r**(-alpha) dr`` for ``alpha < 2``.

    ``f`` must accept numpy arrays. For ``alpha >= 1`` the integral only
    exists when ``f(0) = 0``; the caller is expected to subtract the
    leading term first. ``breakpoints`` mark points where ``f`` is less
    smooth; the Gauss-Jacobi panel stops at the first of them.
    """
    alpha = float(alpha)
    if not alpha < 2:
        raise DomainError("singular_quad needs alpha < 2")
    if not L > 0:
        raise DomainError("singular_quad needs L > 0")
    g = f
    weight = alpha
    if alpha >= 1:
        f0 = float(np.asarray(f(np.array([0.0])), dtype=float)[0])
        if f0 != 0.0:
            raise DomainError("for alpha >= 1 the integrand needs f(0) = 0")
        # absorb one power of r into the weight: f r^-alpha = (f/r) r^(1-alpha)
        g = lambda r: np.asarray(f(r), dtype=float) / r  # noqa: E731
        weight = alpha - 1.0
    inner = [p for p in breakpoints if 0 < p < L]
    delta = min(inner) if inner else L
    val, err, evals = jacobi_panel(g, weight, delta)
    if delta < L:
        v2, e2, n2 = _smooth_quad(lambda r: f(r) * r ** (-alpha), delta, L, inner)
        val += v2
        err += e2
        evals += n2
    return QuadratureResult(val, err, evals)


def regularized_pairing(q, q0, alpha, eps=0.1, breakpoints=()):
    """Regularised ``int_0^1 q(r) r**(-alpha) dr`` with ``q(0) = q0``.

    The divergent part ``q0 r**(-alpha)`` on ``[0, eps]`` is replaced by its
    analytic continuation ``q0 eps**(1-alpha)/(1-alpha)`` (``q0 ln eps``
    at ``alpha = 1``), so the result does not depend on ``eps``.
    """
    alpha = float(alpha)
    if not alpha < 2:
        raise DomainError("the regularised pairing needs alpha < 2")
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")

    def h(r):
        r = np.asarray(r, dtype=float)
        return (np.asarray(q(r), dtype=float) - q0) / r

    inner = [p for p in breakpoints if 0 < p < eps]
    delta = min(inner) if inner else eps
    def h_noise(r):
        # the difference q - q0 cancels; its rounding is amplified by 1/r
        return 64.0 * np.finfo(float).eps * (np.abs(np.asarray(q(r), dtype=float)) + abs(q0)) / r

    # (q - q0) r^-alpha = h(r) r^(1-alpha), integrable for alpha < 2
    near, _, _ = jacobi_panel(h, alpha - 1.0, delta, h_noise)
    if delta < eps:
        near += _smooth_quad(lambda r: h(r) * r ** (1.0 - alpha), delta, eps, inner)[0]
    far = _smooth_quad(lambda r: q(r) * r ** (-alpha), eps, 1.0, breakpoints)[0]
    if abs(alpha - 1.0) <= LOG_BRANCH:
        pole = q0 * math.log(eps)
    else:
        pole = q0 * eps ** (1.0 - alpha) / (1.0 - alpha)
    return near + far + pole


def _profile_breakpoints(*profiles):
    pts = set()
    for p in profiles:
        pts.update(getattr(p, "breakpoints", ()) or ())
    return tuple(sorted(x for x in pts if 0 < x < 1))


def i_reg(phi: Profile, rho: Profile, alpha=None, eps=0.1) -> float:
    """Regularised interior pairing of a singular profile with a smooth one.

    ``alpha`` defaults to ``phi.alpha``; ``rho`` must be smooth (its
    ``alpha`` is zero). Below ``Re(alpha) = 1`` this is the plain integral
    of ``phi * rho`` over ``[0, 1]``.
    """
    alpha = phi.alpha if alpha is None else float(alpha)
    if not alpha < 2:
        raise DomainError("i_reg needs alpha < 2")
    if getattr(rho, "alpha", 0.0) != 0.0:
        raise DomainError("rho must be smooth (alpha = 0)")

    def q(r):
        return phi.regular(r) * rho.regular(r)

    q0 = float(phi.smooth(0.0) * rho.smooth(0.0))
    return regularized_pairing(q, q0, alpha, eps, _profile_breakpoints(phi, rho))
