"""Operators, radial profiles and boundary jets.

Everything radial lives on the unit interval ``[0, 1]`` with the boundary
of interest at ``r = 0``. Smooth data are polynomials, optionally
multiplied by a C^2 quintic cutoff; singular data carry an extra factor
``r**(-alpha)``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DomainError

MAX_DEGREE = 8


def as_poly(coef) -> Polynomial:
    """Coerce a scalar, coefficient list (ascending) or Polynomial."""
    if isinstance(coef, Polynomial):
        return coef
    return Polynomial(np.atleast_1d(np.asarray(coef, dtype=float)))


def _poly_coefs(p: Polynomial) -> list:
    return [float(c) for c in p.coef]


# --------------------------------------------------------------------------
# cutoff


@dataclass(frozen=True)
class Cutoff:
    """C^2 cutoff: 1 on ``[0, start]``, 0 on ``[end, 1]``, quintic smoothstep between."""

    start: float
    end: float

    def __post_init__(self):
        if not (0.0 < self.start < self.end <= 1.0):
            raise DomainError(
                f"cutoff needs 0 < start < end <= 1, got start={self.start}, end={self.end}"
            )

    def __call__(self, r):
        return self.derivative(r, 0)

    def derivative(self, r, order=0):
        r = np.asarray(r, dtype=float)
        w = self.end - self.start
        s = np.clip((r - self.start) / w, 0.0, 1.0)
        inside = (r > self.start) & (r < self.end)
        # smoothstep S(s) = 10 s^3 - 15 s^4 + 6 s^5, chi = 1 - S
        if order == 0:
            return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s * s)
        if order == 1:
            d = -30.0 * s**2 * (1.0 - s) ** 2 / w
        elif order == 2:
            d = -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / w**2
        elif order == 3:
            d = -60.0 * (1.0 - 6.0 * s + 6.0 * s * s) / w**3
        else:
            raise ValueError("cutoff derivatives are provided up to order 3")
        return np.where(inside, d, 0.0)

    def to_dict(self):
        return {"start": self.start, "end": self.end}


# --------------------------------------------------------------------------
# boundary conditions and operators


@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet (``kind='dirichlet'``) or Robin ``u_{;m} + S u = 0``.

    ``S`` is the endomorphism paired with the covariant normal derivative;
    the plain-derivative coefficient seen by a solver is ``S + omega`` at
    that end (see ``OperatorSpec1D.plain_robin``).
    """

    kind: str = "dirichlet"
    S: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "robin"):
            raise DomainError(f"unknown boundary condition {self.kind!r}")

    @property
    def is_dirichlet(self):
        return self.kind == "dirichlet"

    def to_dict(self):
        if self.is_dirichlet:
            return {"type": "dirichlet"}
        return {"type": "robin", "S": self.S}

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, str):
            d = {"type": d}
        kind = d.get("type", "dirichlet")
        return cls(kind, float(d.get("S", 0.0)))


DIRICHLET = BoundaryCondition("dirichlet")


def robin(S=0.0):
    return BoundaryCondition("robin", float(S))


@dataclass(frozen=True)
class OperatorSpec1D:
    """``D = -(d^2/dr^2 + a(r) d/dr + b(r))`` on ``[0, 1]``."""

    a: Polynomial = field(default_factory=lambda: Polynomial([0.0]))
    b: Polynomial = field(default_factory=lambda: Polynomial([0.0]))
    bc_left: BoundaryCondition = DIRICHLET
    bc_right: BoundaryCondition = DIRICHLET

    def __post_init__(self):
        object.__setattr__(self, "a", as_poly(self.a).trim())
        object.__setattr__(self, "b", as_poly(self.b).trim())
        for name in ("a", "b"):
            if getattr(self, name).degree() > MAX_DEGREE:
                raise DomainError(f"coefficient {name} has degree > {MAX_DEGREE}")

    @property
    def is_constant_coefficient(self):
        return self.a.degree() == 0 and self.a.coef[0] == 0.0 and self.b.degree() == 0

    def plain_robin(self):
        """Plain-derivative Robin coefficients ``(sigma0, sigma1)``.

        At ``r=0`` the condition reads ``u' + sigma0 u = 0``; at ``r=1``
        (inward normal ``-d/dr``) it reads ``-u' + sigma1 u = 0``.
        Entries are ``None`` for Dirichlet ends.
        """
        omega = self.a / 2
        s0 = None if self.bc_left.is_dirichlet else self.bc_left.S + omega(0.0)
        s1 = None if self.bc_right.is_dirichlet else self.bc_right.S - omega(1.0)
        return s0, s1

    def to_dict(self):
        return {
            "a": _poly_coefs(self.a),
            "b": _poly_coefs(self.b),
            "bc_left": self.bc_left.to_dict(),
            "bc_right": self.bc_right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            a=as_poly(d.get("a", [0.0])),
            b=as_poly(d.get("b", [0.0])),
            bc_left=BoundaryCondition.from_dict(d.get("bc_left", "dirichlet")),
            bc_right=BoundaryCondition.from_dict(d.get("bc_right", "dirichlet")),
        )


def connection_from_operator(op: OperatorSpec1D):
    """Connection coefficient ``omega`` and endomorphism ``E`` of ``op``.

    In one flat dimension ``omega = a/2`` and ``E = b - omega' - omega^2``,
    so that ``D = -((d + omega)^2 + E)``.
    """
    omega = op.a / 2
    E = op.b - omega.deriv() - omega * omega
    return omega.trim(), E.trim()


def formal_adjoint(op: OperatorSpec1D) -> OperatorSpec1D:
    """Operator with ``int (D f) g = int f (D~ g)`` for compactly supported data.

    Boundary tags carry over unchanged: the dual Robin endomorphism equals
    ``S`` for scalars, and the dual connection flips the sign of ``omega``.
    """
    return OperatorSpec1D(a=-op.a, b=op.b - op.a.deriv(), bc_left=op.bc_left, bc_right=op.bc_right)


# --------------------------------------------------------------------------
# radial functions


class RadialFunction:
    """``f(r) = g(r) * r**(-alpha)`` with a smooth factor ``g`` given as a callable.

    ``breakpoints`` lists interior points where ``g`` is only finitely
    differentiable; quadrature rules split there.
    """

    def __init__(self, regular: Callable, alpha: float = 0.0, breakpoints: Sequence[float] = ()):
        self._regular = regular
        self.alpha = float(alpha)
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))

    def regular(self, r):
        return self._regular(np.asarray(r, dtype=float))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.regular(r) * r ** (-self.alpha)


class Profile(RadialFunction):
    """Radial profile ``chi(r) * p(r) * r**(-alpha)`` with polynomial ``p``.

    ``cutoff=None`` means ``chi = 1`` on the whole interval.
    """

    def __init__(self, smooth=1.0, alpha: float = 0.0, cutoff: Cutoff | None = None):
        self.smooth = as_poly(smooth).trim()
        if self.smooth.degree() > MAX_DEGREE:
            raise DomainError(f"profile polynomial has degree > {MAX_DEGREE}")
        self.cutoff = cutoff
        bps = () if cutoff is None else (cutoff.start, cutoff.end)
        super().__init__(self._eval_regular, alpha, bps)
        if self.alpha != 0.0 and self.smooth(0.0) == 0.0 and np.any(self.smooth.coef != 0):
            raise DomainError("a singular profile needs a nonzero leading value smooth(0)")

    def __repr__(self):
        return f"Profile(smooth={_poly_coefs(self.smooth)}, alpha={self.alpha}, cutoff={self.cutoff})"

    def _eval_regular(self, r):
        val = self.smooth(r)
        if self.cutoff is not None:
            val = val * self.cutoff(r)
        return val

    def regular_derivative(self, r, order=0):
        """Derivative of ``chi * p`` (Leibniz rule)."""
        r = np.asarray(r, dtype=float)
        if self.cutoff is None:
            return self.smooth.deriv(order)(r) if order else self.smooth(r)
        total = np.zeros_like(r)
        for k in range(order + 1):
            pk = self.smooth.deriv(order - k) if order - k else self.smooth
            total = total + math.comb(order, k) * self.cutoff.derivative(r, k) * pk(r)
        return total

    @property
    def support_end(self):
        return 1.0 if self.cutoff is None else self.cutoff.end

    def scaled(self, factor):
        return Profile(self.smooth * factor, self.alpha, self.cutoff)

    def to_dict(self):
        return {
            "smooth": _poly_coefs(self.smooth),
            "alpha": self.alpha,
            "cutoff": None if self.cutoff is None else self.cutoff.to_dict(),
        }

    @classmethod
    def from_dict(cls, d, alpha=None):
        cut = d.get("cutoff")
        return cls(
            smooth=as_poly(d.get("smooth", [1.0])),
            alpha=float(d.get("alpha", 0.0) if alpha is None else alpha),
            cutoff=None if cut is None else Cutoff(float(cut["start"]), float(cut["end"])),
        )


# --------------------------------------------------------------------------
# boundary jets


@dataclass(frozen=True)
class BoundaryJet:
    """Boundary germ data for a boundary-homogeneous problem.

    ``phi_i`` and ``rho_i`` are the radial expansion coefficients of the
    initial temperature (after removing ``r**(-alpha)``) and of the specific
    heat; the rest are curvature/potential data at the boundary.
    """

    phi0: float = 0.0
    phi1: float = 0.0
    phi2: float = 0.0
    rho0: float = 0.0
    rho1: float = 0.0
    rho2: float = 0.0
    Laa: float = 0.0
    LabLab: float = 0.0
    LaaLbb: float = 0.0
    Ricmm: float = 0.0
    E: float = 0.0
    S: float = 0.0
    tau: float = 0.0
    grad_pair: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise DomainError(f"jet field {f.name} is not finite")

    replace = dataclasses.replace

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DomainError(f"unknown jet fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


def _covariant_taylor(p: Polynomial, omega: Polynomial, order: int):
    # coefficients (1/i!) (d + omega)^i p at 0, i = 0..order
    out = []
    cur = p
    for i in range(order + 1):
        out.append(float(cur(0.0)) / math.factorial(i))
        cur = cur.deriv() + omega * cur
    return out


def jet_from_profiles(phi: Profile, rho: Profile, op: OperatorSpec1D | None = None) -> BoundaryJet:
    """Boundary jet at ``r = 0`` of a bare interval.

    ``phi_i`` come from ``(d + omega)`` applied to ``r**alpha * phi`` and
    ``rho_i`` from ``(d - omega)`` applied to ``rho``. Curvature fields are
    zero; ``E`` and the Robin ``S`` (if any) are read off ``op``.
    """
    if rho.alpha != 0.0:
        raise DomainError("the specific heat must be smooth (alpha = 0)")
    op = op or OperatorSpec1D()
    omega, E = connection_from_operator(op)
    ph = _covariant_taylor(phi.smooth, omega, 2)
    rh = _covariant_taylor(rho.smooth, -omega, 2)
    S = 0.0 if op.bc_left.is_dirichlet else op.bc_left.S
    return BoundaryJet(
        phi0=ph[0], phi1=ph[1], phi2=ph[2],
        rho0=rh[0], rho1=rh[1], rho2=rh[2],
        E=float(E(0.0)), S=S,
    )


@dataclass(frozen=True)
class WarpedProductSpec:
    """Metric ``sum_a exp(2 f_a(r)) dy_a^2 + dr^2`` on a torus times ``[0, 1]``.

    Only the 2-jets of the warps at ``r = 0`` matter; the warps are taken
    to be cut off smoothly before ``r = 1``.
    """

    warps: tuple
    deltas: tuple
    dim: int

    def __post_init__(self):
        warps = tuple(as_poly(f) for f in self.warps)
        deltas = tuple(float(d) for d in self.deltas)
        object.__setattr__(self, "warps", warps)
        object.__setattr__(self, "deltas", deltas)
        if len(warps) != self.dim - 1 or len(deltas) != self.dim - 1:
            raise DomainError("need exactly dim - 1 warps and deltas")

    @property
    def torus_volume(self):
        return (2 * math.pi) ** (self.dim - 1)

    def to_dict(self):
        return {"warps": [_poly_coefs(f) for f in self.warps], "deltas": list(self.deltas), "dim": self.dim}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["warps"]), tuple(d["deltas"]), int(d["dim"]))


def warped_jets(w: WarpedProductSpec, alpha: float = 0.0) -> BoundaryJet:
    """Boundary jet of the warped product with ``phi = r**-alpha`` and ``rho = exp(-sum f_a)``.

    ``S`` is set to ``sum f_a'(0) / 2``, the value that turns the Robin
    condition into a pure Neumann condition on the radial factor.
    """
    for i, f in enumerate(w.warps):
        if abs(f(0.0)) > 1e-14:
            raise DomainError(f"warp {i} does not vanish at r = 0")
    d1 = sum(float(f.deriv()(0.0)) for f in w.warps)
    d2 = sum(float(f.deriv(2)(0.0)) for f in w.warps)
    sq1 = sum(float(f.deriv()(0.0)) ** 2 for f in w.warps)
    dd = sum(d * d for d in w.deltas)
    c1 = -0.5 * d1
    c2 = d1 * d1 / 8 - d2 / 4
    return BoundaryJet(
        phi0=1.0, phi1=c1, phi2=c2,
        rho0=1.0, rho1=c1, rho2=c2,
        E=0.5 * d2 + 0.25 * d1 * d1 - 0.25 * dd,
        Laa=-d1,
        Ricmm=-(sq1 + d2),
        LaaLbb=d1 * d1,
        LabLab=sq1,
        S=0.5 * d1,
        # tangential covariant derivatives of the constant sections are +-delta_a/2
        grad_pair=-0.25 * dd,
    )
