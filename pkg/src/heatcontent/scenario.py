"""Scenario documents: problem definition, solve, fit and comparison with closed forms.

A scenario is a JSON object; ``load_scenario`` validates it and
``run_scenario`` executes it. Four kinds exist:

``expansion``
    solve on a time grid, fit the small-time expansion and compare fitted
    coefficients with their closed forms;
``factorization``
    check that the time derivative of the Robin heat content for
    ``A*A`` equals minus the Dirichlet heat content for ``A A*``;
``recursion``
    check ``d/dt beta(phi, rho) = -beta(phi, D~ rho)`` when ``rho(0) = 0``;
``product``
    compare a double spectral sum on ``[0, 1]`` times a circle with the
    product of the two factor heat contents.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import asymptotics, coefficients, regularize, solver
from .errors import ConvergenceError, DomainError, HeatContentError, PoleError, ValidationError
from .geometry import (
    BoundaryCondition, OperatorSpec1D, Profile, WarpedProductSpec, as_poly,
    formal_adjoint, jet_from_profiles, warped_jets,
)

KINDS = ("expansion", "factorization", "recursion", "product")
METHODS = {"spectral": solver.SPECTRAL, "cn": solver.CRANK_NICOLSON, "halfline": solver.HALFLINE}
DEFAULT_GRIDS = {
    "spectral": {"start": 1e-6, "stop": 1e-2, "num": 40},
    "halfline": {"start": 1e-6, "stop": 1e-2, "num": 40},
    "cn": {"start": 1e-3, "stop": 1e-1, "num": 40},
}
TERM_NAMES = ("b0", "b1", "b2", "log0", "log1", "log2") + tuple(f"interior{n}" for n in range(5))


class ScenarioRunError(HeatContentError):
    """A solver or fit failure, tagged with the scenario that triggered it."""

    def __init__(self, scenario, cause):
        super().__init__(f"scenario {scenario!r}: {type(cause).__name__}: {cause}")
        self.scenario = scenario
        self.cause = cause


# --------------------------------------------------------------------------
# validation helpers


def _req(d, key, path):
    if key not in d:
        raise ValidationError(f"{path}{key}", "is required")
    return d[key]


def _num(v, path, positive=False, finite=True):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(path, f"must be a number, got {v!r}")
    v = float(v)
    if finite and not math.isfinite(v):
        raise ValidationError(path, "must be finite")
    if positive and not v > 0:
        raise ValidationError(path, "must be positive")
    return v


def _poly(v, path):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list) or not v:
        raise ValidationError(path, "must be a non-empty list of coefficients")
    return [_num(c, f"{path}[{i}]") for i, c in enumerate(v)]


def _wrap(path, fn, *args):
    try:
        return fn(*args)
    except ValidationError:
        raise
    except (DomainError, ValueError, KeyError, TypeError) as exc:
        raise ValidationError(path, str(exc)) from exc


def _profile(d, path, alpha):
    if not isinstance(d, dict):
        raise ValidationError(path, "must be an object")
    unknown = set(d) - {"smooth", "cutoff"}
    if unknown:
        raise ValidationError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    smooth = _poly(d.get("smooth", [1.0]), f"{path}.smooth")
    cut = d.get("cutoff")
    if cut is not None:
        if not isinstance(cut, dict):
            raise ValidationError(f"{path}.cutoff", "must be an object or null")
        cut = {"start": _num(_req(cut, "start", f"{path}.cutoff."), f"{path}.cutoff.start"),
               "end": _num(_req(cut, "end", f"{path}.cutoff."), f"{path}.cutoff.end")}
    return _wrap(path, Profile.from_dict, {"smooth": smooth, "cutoff": cut}, alpha)


def _bc(v, path):
    if isinstance(v, str):
        v = {"type": v}
    if not isinstance(v, dict):
        raise ValidationError(path, "must be 'dirichlet' or an object")
    if v.get("type", "dirichlet") not in ("dirichlet", "robin"):
        raise ValidationError(f"{path}.type", "must be 'dirichlet' or 'robin'")
    if "S" in v:
        _num(v["S"], f"{path}.S")
    return BoundaryCondition.from_dict(v)


def _operator(d, path):
    if d is None:
        return OperatorSpec1D()
    if not isinstance(d, dict):
        raise ValidationError(path, "must be an object")
    a = _poly(d.get("a", [0.0]), f"{path}.a")
    b = _poly(d.get("b", [0.0]), f"{path}.b")
    left = _bc(d.get("bc_left", "dirichlet"), f"{path}.bc_left")
    right = _bc(d.get("bc_right", "dirichlet"), f"{path}.bc_right")
    return _wrap(path, OperatorSpec1D, as_poly(a), as_poly(b), left, right)


def _grid(d, path, method):
    d = DEFAULT_GRIDS[method] if d is None else d
    if isinstance(d, list):
        vals = [_num(v, f"{path}[{i}]", positive=True) for i, v in enumerate(d)]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValidationError(path, "must be strictly increasing")
        return np.array(vals)
    if not isinstance(d, dict):
        raise ValidationError(path, "must be a list or an object")
    start = _num(_req(d, "start", f"{path}."), f"{path}.start", positive=True)
    stop = _num(_req(d, "stop", f"{path}."), f"{path}.stop", positive=True)
    num = _req(d, "num", f"{path}.")
    if isinstance(num, bool) or not isinstance(num, int) or num < 2:
        raise ValidationError(f"{path}.num", "must be an integer >= 2")
    if not stop > start:
        raise ValidationError(f"{path}.stop", "must exceed start")
    spacing = d.get("spacing", "geometric")
    if spacing == "geometric":
        return np.geomspace(start, stop, num)
    if spacing == "linear":
        return np.linspace(start, stop, num)
    raise ValidationError(f"{path}.spacing", "must be 'geometric' or 'linear'")


# --------------------------------------------------------------------------
# scenario


@dataclass
class Scenario:
    name: str
    kind: str
    method: str
    problem: solver.HeatProblem1D
    manifold_factor: float
    t_grid: np.ndarray
    basis: tuple  # (k_max, n_max)
    tolerances: dict
    anchor: str = ""
    reference_scale: dict = field(default_factory=dict)
    warp: WarpedProductSpec | None = None
    factor_b: object = None
    check_times: np.ndarray | None = None
    raw: dict = field(default_factory=dict)


_TOP_FIELDS = {
    "name", "anchor", "kind", "method", "alpha", "operator", "phi", "rho", "warp",
    "manifold_factor", "t_grid", "basis", "tolerances", "reference_scale", "b",
    "check_times", "description",
}


def load_scenario(config) -> Scenario:
    """Validate a scenario document (dict, JSON text or path) and build a Scenario.

    Raises ValidationError naming the offending field in dotted notation.
    """
    if isinstance(config, (str, bytes)) and not str(config).lstrip().startswith("{"):
        with open(config, encoding="utf-8") as fh:
            config = json.load(fh)
    elif isinstance(config, (str, bytes)):
        config = json.loads(config)
    if not isinstance(config, dict):
        raise ValidationError("<root>", "scenario must be a JSON object")
    unknown = set(config) - _TOP_FIELDS
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown field")

    name = _req(config, "name", "")
    if not isinstance(name, str) or not name:
        raise ValidationError("name", "must be a non-empty string")
    kind = config.get("kind", "expansion")
    if kind not in KINDS:
        raise ValidationError("kind", f"must be one of {', '.join(KINDS)}")
    method = config.get("method", "spectral")
    if method not in METHODS:
        raise ValidationError("method", f"must be one of {', '.join(METHODS)}")
    alpha = _num(_req(config, "alpha", ""), "alpha")
    if not alpha < 2:
        raise ValidationError("alpha", "must be < 2")
    op = _operator(config.get("operator"), "operator")
    phi = _profile(config.get("phi", {}), "phi", alpha)
    rho = _profile(config.get("rho", {}), "rho", 0.0)
    problem = _wrap("operator", solver.HeatProblem1D, op, phi, rho, alpha)

    warp = None
    if config.get("warp") is not None:
        w = config["warp"]
        if not isinstance(w, dict):
            raise ValidationError("warp", "must be an object")
        for key in ("warps", "deltas", "dim"):
            _req(w, key, "warp.")
        warp = _wrap("warp", WarpedProductSpec.from_dict, w)
        if any(abs(f(0.0)) > 0 for f in warp.warps):
            raise ValidationError("warp.warps", "every warp must vanish at r = 0")
    mf = config.get("manifold_factor", warp.torus_volume if warp else 1.0)
    mf = _num(mf, "manifold_factor", positive=True)

    t_grid = _grid(config.get("t_grid"), "t_grid", method)
    basis = config.get("basis", {})
    if not isinstance(basis, dict):
        raise ValidationError("basis", "must be an object")
    k_max = basis.get("k_max", 2)
    n_max = basis.get("n_max", 1)
    for key, v in (("k_max", k_max), ("n_max", n_max)):
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= 4:
            raise ValidationError(f"basis.{key}", "must be an integer in 0..4")

    tol = config.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ValidationError("tolerances", "must be an object")
    tolerances = {}
    for key, v in tol.items():
        tolerances[key] = _num(v, f"tolerances.{key}", positive=True)
        if kind == "expansion" and key not in TERM_NAMES:
            raise ValidationError(f"tolerances.{key}", "unknown coefficient name")
        if kind != "expansion" and key != "identity":
            raise ValidationError(f"tolerances.{key}", "only 'identity' applies to this kind")
    if kind != "expansion" and "identity" not in tolerances:
        raise ValidationError("tolerances.identity", "is required")
    ref = config.get("reference_scale", {})
    if not isinstance(ref, dict):
        raise ValidationError("reference_scale", "must be an object")
    for key, v in ref.items():
        if key not in tolerances:
            raise ValidationError(f"reference_scale.{key}", "has no tolerance")
        if v not in TERM_NAMES:
            raise ValidationError(f"reference_scale.{key}", "must name a coefficient")

    anchor = config.get("anchor", "")
    if not isinstance(anchor, str):
        raise ValidationError("anchor", "must be a string")

    if kind == "expansion":
        if method == "halfline":
            if not (op.is_constant_coefficient and op.b.coef[0] == 0 and op.bc_left.is_dirichlet):
                raise ValidationError("operator", "the half-line oracle needs -d^2 with a Dirichlet end")
            if rho.smooth.degree() != 0 or rho.smooth.coef[0] != 1.0 or rho.cutoff is not None:
                raise ValidationError("rho", "the half-line oracle needs rho = 1")
        n_cols = len(_quiet_basis(alpha, k_max, n_max))
        if len(t_grid) < n_cols + 2:
            raise ValidationError("t_grid.num", f"needs at least {n_cols + 2} points")
        if np.log10(t_grid[-1] / t_grid[0]) < 2 - 1e-9:
            raise ValidationError("t_grid", "must span at least two decades")
        for key in tolerances:
            _term_exponent(key, alpha, k_max, n_max)

    factor_b = None
    if kind == "factorization":
        factor_b = as_poly(_poly(_req(config, "b", ""), "b"))
        if not alpha < 0:
            raise ValidationError("alpha", "the factorised pair needs alpha < 0 so that A phi is integrable")
    check_times = None
    if kind in ("factorization", "recursion"):
        ct = config.get("check_times", [0.05, 0.1, 0.15, 0.2])
        check_times = _grid(ct, "check_times", method)
    if kind == "recursion" and rho.smooth(0.0) != 0.0:
        raise ValidationError("rho.smooth", "the recursion check needs rho(0) = 0")
    if kind in ("recursion", "product") and method != "spectral":
        raise ValidationError("method", f"the {kind} check uses the spectral solver")

    return Scenario(
        name=name, kind=kind, method=method, problem=problem, manifold_factor=mf,
        t_grid=t_grid, basis=(k_max, n_max), tolerances=tolerances, anchor=anchor,
        reference_scale=dict(ref), warp=warp, factor_b=factor_b, check_times=check_times,
        raw=config,
    )


def _quiet_basis(alpha, k_max, n_max):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return asymptotics.build_basis(alpha, k_max, n_max)


def _term_exponent(term, alpha, k_max, n_max):
    basis = _quiet_basis(alpha, k_max, n_max)
    try:
        return basis.exponent_of(term)
    except KeyError:
        raise ValidationError(f"tolerances.{term}", "is not part of the fitted basis") from None


# --------------------------------------------------------------------------
# analytic side


def interior_pairings(problem: solver.HeatProblem1D, n_max, eps=0.1):
    """``I_Reg(phi, D~^n rho)`` for ``n = 0..n_max``."""
    adj = formal_adjoint(problem.op)
    phi = problem.phi
    out = []
    g = problem.rho
    for n in range(n_max + 1):
        if n:
            g = solver.apply_operator(adj, g)
        gg = g

        def q(r, gg=gg):
            return phi.regular(r) * gg.regular(r)

        q0 = float(np.asarray(phi.regular(np.array([0.0])))[0] * np.asarray(gg.regular(np.array([0.0])))[0])
        bps = tuple(sorted(set(phi.breakpoints) | set(gg.breakpoints)))
        out.append(regularize.regularized_pairing(q, q0, problem.alpha, eps, bps))
    return out


def analytic_coefficients(sc: Scenario):
    """Closed-form coefficients (per unit boundary volume) and named expected terms.

    Returns ``(CoefficientSet, {term: value})`` where the term values are
    already multiplied by the manifold factor.
    """
    p = sc.problem
    alpha = p.alpha
    k_max, n_max = sc.basis
    if sc.warp is not None:
        jet = warped_jets(sc.warp, alpha)
    else:
        jet = jet_from_profiles(p.phi, p.rho, p.op)
    pairs = interior_pairings(p, max(n_max, 1))
    if not p.op.bc_left.is_dirichlet:
        cs = coefficients.robin_coeffs(jet, alpha)
    elif abs(alpha - 1) <= coefficients.POLE_GUARD:
        cs = coefficients.dirichlet_alpha1(jet, pairs[0], pairs[1])
    else:
        cs = coefficients.dirichlet_coeffs(jet, alpha)
    terms = {}
    for k, v in enumerate(cs.boundary):
        terms[f"b{k}"] = complex(v).real
    for k, v in enumerate(cs.logs):
        terms[f"log{k}"] = complex(v).real
    for n in range(n_max + 1):
        terms[f"interior{n}"] = (-1) ** n / math.factorial(n) * pairs[n]
    return cs, {k: v * sc.manifold_factor for k, v in terms.items()}


# --------------------------------------------------------------------------
# report


@dataclass
class Comparison:
    term: str
    exponent: float | None
    is_log: bool
    fitted: float
    analytic: float
    rel_error: float
    tolerance: float
    passed: bool

    def to_dict(self):
        return {
            "term": self.term, "exponent": self.exponent, "log": self.is_log,
            "fitted": self.fitted, "analytic": self.analytic, "rel_error": self.rel_error,
            "tolerance": self.tolerance, "passed": self.passed,
        }


@dataclass
class Report:
    scenario: str
    anchor: str
    kind: str
    method: str
    comparisons: list
    fitted: asymptotics.ExpansionFit | None = None
    analytic: coefficients.CoefficientSet | None = None
    samples: solver.HeatContentSamples | None = None
    runtime: float = 0.0

    @property
    def passed(self):
        return bool(self.comparisons) and all(c.passed for c in self.comparisons)

    def to_dict(self, timing=False):
        d = {
            "scenario": self.scenario,
            "anchor": self.anchor,
            "kind": self.kind,
            "method": self.method,
            "passed": self.passed,
            "comparisons": [c.to_dict() for c in self.comparisons],
            "fit": None if self.fitted is None else self.fitted.to_dict(),
            "analytic": None if self.analytic is None else self.analytic.to_dict(),
        }
        if timing:
            d["runtime"] = self.runtime
        return d

    def to_json(self, timing=False):
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# execution


def simulate(sc: Scenario, t_grid=None) -> solver.HeatContentSamples:
    """Heat content samples of the scenario problem, scaled by the manifold factor."""
    t = sc.t_grid if t_grid is None else np.asarray(t_grid, dtype=float)
    p = sc.problem
    if sc.method == "spectral":
        s = solver.spectral_heat_content(p, t)
    elif sc.method == "cn":
        s = solver.cn_heat_content(p, t)
    else:
        s = solver.halfline_heat_content(p.alpha, p.phi, t)
    return s.scaled(sc.manifold_factor)


def _rel(fitted, analytic, floor=0.0):
    den = max(abs(analytic), floor)
    if den == 0:
        return abs(fitted - analytic)
    return abs(fitted - analytic) / den


def _run_expansion(sc: Scenario) -> Report:
    samples = simulate(sc)
    alpha = sc.problem.alpha
    basis = _quiet_basis(alpha, *sc.basis)
    fitted = asymptotics.fit(samples, basis)
    cs, terms = analytic_coefficients(sc)
    comps = []
    for term, tol in sc.tolerances.items():
        e, is_log = basis.exponent_of(term)
        names = (basis.log_sources if is_log else basis.sources)[e]
        expected = sum(terms.get(n, 0.0) for n in names)
        got = fitted.value(e, is_log)
        floor = abs(terms.get(sc.reference_scale[term], 0.0)) if term in sc.reference_scale else 0.0
        err = _rel(got, expected, floor)
        label = term if len(names) == 1 else "+".join(names)
        comps.append(Comparison(label, e, is_log, float(got), float(expected), float(err), tol, bool(err <= tol)))
    return Report(sc.name, sc.anchor, sc.kind, sc.method, comps, fitted, cs, samples)


def _central_derivative(fn, times, rel_step=0.05):
    # Richardson-extrapolated central difference; fn maps a time array to values
    h = rel_step * np.asarray(times)
    pts = np.concatenate([times - h, times - h / 2, times + h / 2, times + h])
    order = np.argsort(pts)
    vals = np.empty_like(pts)
    vals[order] = fn(pts[order])
    n = len(times)
    m2, m1, p1, p2 = (vals[i * n:(i + 1) * n] for i in range(4))
    d_h = (p2 - m2) / (2 * h)
    d_h2 = (p1 - m1) / h
    return (4 * d_h2 - d_h) / 3


def _identity_report(sc, lhs, rhs, label):
    tol = sc.tolerances["identity"]
    comps = []
    for t, a, b in zip(sc.check_times, lhs, rhs):
        err = _rel(a, b)
        comps.append(Comparison(f"{label}@t={t:.6g}", float(t), False, float(a), float(b), float(err), tol, bool(err <= tol)))
    return Report(sc.name, sc.anchor, sc.kind, sc.method, comps)


def _run_factorization(sc: Scenario) -> Report:
    p1, p2 = solver.factorized_pair(sc.factor_b, sc.problem.phi, sc.problem.rho)
    dbeta = _central_derivative(lambda t: solver.cn_heat_content(p1, t).beta, sc.check_times)
    other = solver.cn_heat_content(p2, sc.check_times).beta
    return _identity_report(sc, dbeta, -other, "dbeta1_dt vs -beta2")


def _run_recursion(sc: Scenario) -> Report:
    p = sc.problem
    drho = solver.apply_operator(formal_adjoint(p.op), p.rho)
    p2 = solver.HeatProblem1D(p.op, p.phi, drho, p.alpha)
    dbeta = _central_derivative(lambda t: solver.spectral_heat_content(p, t).beta, sc.check_times)
    other = solver.spectral_heat_content(p2, sc.check_times).beta
    return _identity_report(sc, dbeta, -other, "dbeta_dt vs -beta(D~rho)")


def _run_product(sc: Scenario) -> Report:
    prod, closed = solver.product_heat_content(sc.problem, sc.t_grid)
    interval = solver.spectral_heat_content(sc.problem, sc.t_grid).beta
    tol = sc.tolerances["identity"]
    comps = []
    for t, a, b in zip(sc.t_grid, prod.beta, closed * interval):
        err = _rel(a, b)
        comps.append(Comparison(f"product@t={t:.6g}", float(t), False, float(a), float(b), float(err), tol, bool(err <= tol)))
    return Report(sc.name, sc.anchor, sc.kind, sc.method, comps, samples=prod)


_RUNNERS = {
    "expansion": _run_expansion,
    "factorization": _run_factorization,
    "recursion": _run_recursion,
    "product": _run_product,
}


def run_scenario(config) -> Report:
    """Validate, solve, fit and compare one scenario.

    ``config`` is a dict, JSON text, a file path, a bundled scenario name
    or an already-loaded Scenario. Solver and fit failures are re-raised
    as ScenarioRunError carrying the scenario name and the original error.
    """
    if isinstance(config, str) and config in bundled_names():
        config = bundled_scenario(config)
    sc = config if isinstance(config, Scenario) else load_scenario(config)
    t0 = time.perf_counter()
    try:
        report = _RUNNERS[sc.kind](sc)
    except (ConvergenceError, DomainError, PoleError, np.linalg.LinAlgError) as exc:
        raise ScenarioRunError(sc.name, exc) from exc
    report.runtime = time.perf_counter() - t0
    return report


# --------------------------------------------------------------------------
# bundled scenarios


def _scenario_dir():
    return resources.files("heatcontent") / "scenarios"


def bundled_names():
    return sorted(p.name[:-5] for p in _scenario_dir().iterdir() if p.name.endswith(".json"))


def bundled_scenario(name) -> dict:
    path = _scenario_dir() / f"{name}.json"
    if not path.is_file():
        raise ValidationError("name", f"no bundled scenario called {name!r}")
    return json.loads(path.read_text(encoding="utf-8"))
