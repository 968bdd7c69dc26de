"""Least-squares extraction of small-time expansion coefficients.

The model is a sum of columns ``t**e`` (and ``t**e * ln t`` at ``alpha = 1``)
with interior exponents ``0, 1, ..., n_max`` and boundary exponents
``(1 + k - alpha)/2``, ``k = 0..k_max``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DomainError, IllConditionedWarning

#: exponents closer than this are merged into one column
MERGE_GAP = 1e-8
#: condition number above which a fit is flagged
COND_LIMIT = 1e10
#: floor applied to per-sample error estimates before weighting
ERR_FLOOR = 1e-13
#: below this distance from alpha = 1 logarithmic columns are added
LOG_ALPHA_TOL = 1e-8


class ExponentCollisionWarning(UserWarning):
    """Two expansion exponents coincide and share a fitted column."""


@dataclass
class BasisSpec:
    """Exponents of the fit model.

    ``sources`` maps each exponent to the expansion terms it carries,
    e.g. ``["interior1", "b1"]`` after a merge; ``log_sources`` does the
    same for logarithmic columns.
    """

    exponents: list
    log_exponents: list
    alpha: float
    sources: dict = field(default_factory=dict)
    log_sources: dict = field(default_factory=dict)
    merges: list = field(default_factory=list)

    def __len__(self):
        return len(self.exponents) + len(self.log_exponents)

    def columns(self):
        return [(e, False) for e in self.exponents] + [(e, True) for e in self.log_exponents]

    def exponent_of(self, term):
        """Exponent and log flag of a named term (``b1``, ``interior0``, ``log2`` ...)."""
        for table, is_log in ((self.sources, False), (self.log_sources, True)):
            for e, names in table.items():
                if term in names:
                    return e, is_log
        raise KeyError(term)


def _merge(items):
    # items: list of (exponent, label); returns sorted exponents, sources, merges
    items = sorted(items)
    exps, sources, merges = [], {}, []
    for e, label in items:
        if exps and abs(e - exps[-1]) <= MERGE_GAP:
            sources[exps[-1]].append(label)
            merges.append((exps[-1], tuple(sources[exps[-1]])))
            continue
        e = float(round(e, 12))
        exps.append(e)
        sources[e] = [label]
    return exps, sources, merges


def build_basis(alpha, k_max=2, n_max=1) -> BasisSpec:
    """Exponent set for ``alpha`` with ``k_max`` boundary and ``n_max`` interior orders.

    Coinciding exponents are merged with an ``ExponentCollisionWarning``;
    the merged column then recovers only the sum of the coinciding terms.
    """
    alpha = float(alpha)
    if not alpha < 2:
        raise DomainError("build_basis needs alpha < 2")
    if k_max < 0 or n_max < 0:
        raise DomainError("k_max and n_max must be non-negative")
    items = [(float(n), f"interior{n}") for n in range(n_max + 1)]
    items += [((1 + k - alpha) / 2, f"b{k}") for k in range(k_max + 1)]
    exps, sources, merges = _merge(items)
    log_exps, log_sources = [], {}
    if abs(alpha - 1) <= LOG_ALPHA_TOL:
        log_exps, log_sources, _ = _merge([(k / 2, f"log{k}") for k in range(k_max + 1)])
    # report each merged group once, with its final membership
    final = {e: tuple(sources[e]) for e, _ in merges}
    for e, names in sorted(final.items()):
        warnings.warn(
            f"exponent {e:g} is shared by {', '.join(names)}; their sum is fitted",
            ExponentCollisionWarning, stacklevel=2,
        )
    return BasisSpec(exps, log_exps, alpha, sources, log_sources, sorted(final.items()))


@dataclass(frozen=True)
class FitTerm:
    exponent: float
    is_log: bool
    value: float
    stderr: float


@dataclass
class ExpansionFit:
    coefficients: list
    condition_number: float
    max_residual: float
    ill_conditioned: bool = False
    n_samples: int = 0

    def coefficient(self, exponent, is_log=False):
        for c in self.coefficients:
            if c.is_log == is_log and abs(c.exponent - exponent) <= MERGE_GAP:
                return c
        raise KeyError((exponent, is_log))

    def value(self, exponent, is_log=False):
        return self.coefficient(exponent, is_log).value

    def to_dict(self):
        return {
            "coefficients": [
                {"exponent": c.exponent, "log": c.is_log, "value": c.value, "stderr": c.stderr}
                for c in self.coefficients
            ],
            "condition_number": self.condition_number,
            "max_residual": self.max_residual,
            "ill_conditioned": self.ill_conditioned,
            "n_samples": self.n_samples,
        }


def design_matrix(t, basis: BasisSpec):
    t = np.asarray(t, dtype=float)
    lt = np.log(t)
    cols = [t**e * lt if is_log else t**e for e, is_log in basis.columns()]
    return np.column_stack(cols)


def fit(samples, basis: BasisSpec, weighted=True) -> ExpansionFit:
    """Weighted linear least squares of ``samples`` on ``basis``.

    Rows are weighted by the inverse of the reported sample errors (floored
    at ``ERR_FLOOR``), columns are scaled to unit norm, and the system is
    solved through a QR factorisation. Standard errors come from the
    residual variance; an ``IllConditionedWarning`` is issued (and the fit
    flagged) when the scaled condition number exceeds ``COND_LIMIT``.
    """
    t = np.asarray(samples.t, dtype=float)
    y = np.asarray(samples.beta, dtype=float)
    p = len(basis)
    if t.size < p + 2:
        raise DomainError(f"need at least {p + 2} samples for {p} columns, got {t.size}")
    if np.log10(t.max() / t.min()) < 2 - 1e-9:
        raise DomainError("sample times must span at least two decades")
    X = design_matrix(t, basis)
    if weighted:
        w = 1.0 / np.maximum(np.asarray(samples.err, dtype=float), ERR_FLOOR * np.maximum(np.abs(y), 1.0))
    else:
        w = np.ones_like(t)
    Xw = X * w[:, None]
    yw = y * w
    scale = np.linalg.norm(Xw, axis=0)
    if np.any(scale == 0):
        raise DomainError("a basis column vanishes on the sample grid")
    Xs = Xw / scale
    Q, R = linalg.qr(Xs, mode="economic")
    z = linalg.solve_triangular(R, Q.T @ yw)
    coef = z / scale
    sv = np.linalg.svd(Xs, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    resid_w = yw - Xs @ z
    dof = t.size - p
    sigma2 = float(resid_w @ resid_w) / dof
    Rinv = linalg.solve_triangular(R, np.eye(p))
    cov = sigma2 * (Rinv @ Rinv.T)
    stderr = np.sqrt(np.maximum(np.diag(cov), 0.0)) / scale
    resid = y - X @ coef
    max_res = float(np.max(np.abs(resid) / np.maximum(np.abs(y), 1e-300)))
    ill = cond > COND_LIMIT
    if ill:
        warnings.warn(f"fit condition number {cond:.3g} exceeds {COND_LIMIT:g}", IllConditionedWarning, stacklevel=2)
    terms = [FitTerm(e, is_log, float(c), float(s)) for (e, is_log), c, s in zip(basis.columns(), coef, stderr)]
    return ExpansionFit(terms, max(cond, 1.0), max_res, ill, int(t.size))
