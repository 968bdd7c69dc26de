"""Command-line front end.

Subcommands::

    heatcontent coeffs --alpha A --bc {dirichlet,robin} [--jet FILE]
    heatcontent simulate --scenario FILE --out CSV [--plot PREFIX]
    heatcontent fit --samples CSV --alpha A [--kmax K] [--nmax N]
    heatcontent regularize --scenario FILE
    heatcontent verify --alpha-grid START:STOP:STEP
    heatcontent scenario run FILE_OR_NAME ... [--out FILE] [--plot PREFIX]
    heatcontent scenario list

Exit codes: 0 success, 1 a comparison failed, 2 usage or configuration
error, 3 numerical failure. With ``--error-json`` failures are also
reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import asymptotics, coefficients, scenario as scen, solver
from .errors import ConvergenceError, DomainError, HeatContentError, PoleError, ValidationError
from .geometry import BoundaryJet

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _parse_alpha(text):
    try:
        if "j" in text:
            return complex(text.replace(" ", ""))
        return float(text)
    except ValueError:
        raise ValidationError("alpha", f"cannot parse {text!r}") from None


def parse_alpha_grid(spec):
    """``"start:stop:step"`` (stop inclusive) or a comma-separated list."""
    if ":" not in spec:
        try:
            return [float(x) for x in spec.split(",") if x.strip()]
        except ValueError:
            raise ValidationError("alpha-grid", f"cannot parse {spec!r}") from None
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValidationError("alpha-grid", "expected START:STOP:STEP")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ValidationError("alpha-grid", f"cannot parse {spec!r}") from None
    if step <= 0 or stop < start:
        raise ValidationError("alpha-grid", "need STEP > 0 and STOP >= START")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 12) for i in range(n + 1)]


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def write_plot(prefix, samples: solver.HeatContentSamples, fit=None, title="heat content"):
    """Gnuplot data file ``PREFIX.dat`` and script ``PREFIX.gp``."""
    cols = [samples.t, samples.beta, samples.err]
    header = "# t beta err"
    if fit is not None:
        basis_cols = [(c.exponent, c.is_log) for c in fit.coefficients]
        model = np.zeros_like(samples.t)
        for (e, is_log), c in zip(basis_cols, fit.coefficients):
            col = samples.t**e * (np.log(samples.t) if is_log else 1.0)
            model += c.value * col
        cols.append(model)
        header += " fit"
    rows = "\n".join(" ".join(f"{v:.17g}" for v in row) for row in zip(*cols))
    _write(prefix + ".dat", header + "\n" + rows + "\n")
    name = os.path.basename(prefix)
    lines = [
        "set logscale x",
        "set xlabel 't'",
        "set ylabel 'beta(t)'",
        f"set title '{title}'",
        f"plot '{name}.dat' using 1:2 with points title 'samples'"
        + (f", '{name}.dat' using 1:4 with lines title 'fit'" if fit is not None else ""),
    ]
    _write(prefix + ".gp", "\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# subcommands


def cmd_coeffs(args):
    alpha = _parse_alpha(args.alpha)
    if args.jet:
        with open(args.jet, encoding="utf-8") as fh:
            try:
                jet = BoundaryJet.from_dict(json.load(fh))
            except (DomainError, KeyError, TypeError, ValueError) as exc:
                raise ValidationError("jet", str(exc)) from exc
    else:
        jet = BoundaryJet(phi0=1.0, rho0=1.0)
    if args.bc == "robin":
        cs = coefficients.robin_coeffs(jet, alpha)
    elif alpha == 1:
        i0, i1 = args.interior
        cs = coefficients.dirichlet_alpha1(jet, i0, i1)
    else:
        cs = coefficients.dirichlet_coeffs(jet, alpha)
    sys.stdout.write(_dumps(cs.to_dict()))
    return EXIT_OK


def cmd_simulate(args):
    sc = scen.load_scenario(_resolve(args.scenario))
    samples = scen.simulate(sc)
    _write(args.out, samples.to_csv())
    if args.plot:
        write_plot(args.plot, samples, title=sc.name)
    return EXIT_OK


def cmd_fit(args):
    with open(args.samples, encoding="utf-8") as fh:
        try:
            samples = solver.HeatContentSamples.from_csv(fh.read())
        except (DomainError, ValueError, IndexError) as exc:
            raise ValidationError("samples", str(exc)) from exc
    alpha = _parse_alpha(args.alpha)
    if isinstance(alpha, complex):
        raise ValidationError("alpha", "fits need a real alpha")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", asymptotics.ExponentCollisionWarning)
        try:
            basis = asymptotics.build_basis(alpha, args.kmax, args.nmax)
        except DomainError as exc:
            raise ValidationError("kmax", str(exc)) from exc
    try:
        result = asymptotics.fit(samples, basis)
    except DomainError as exc:
        raise ValidationError("samples", str(exc)) from exc
    out = result.to_dict()
    out["alpha"] = alpha
    out["terms"] = {
        "+".join(names): result.value(e) for e, names in basis.sources.items()
    }
    out["terms"].update({"+".join(names): result.value(e, True) for e, names in basis.log_sources.items()})
    _write(args.out, _dumps(out))
    if args.plot:
        write_plot(args.plot, samples, result)
    return EXIT_OK


def cmd_regularize(args):
    sc = scen.load_scenario(_resolve(args.scenario))
    values = scen.interior_pairings(sc.problem, 0, eps=args.eps)
    sys.stdout.write(_dumps({"scenario": sc.name, "alpha": sc.problem.alpha, "i_reg": values[0]}))
    return EXIT_OK


def cmd_verify(args):
    grid = parse_alpha_grid(args.alpha_grid)
    reports = [coefficients.check_relations(a) for a in grid]
    if args.json:
        sys.stdout.write(_dumps([r.to_dict() for r in reports]))
    else:
        out = [f"{'alpha':>8}  {'evaluated':>9}  {'skipped':>7}  {'max_residual':>12}  status"]
        for a, r in zip(grid, reports):
            status = "pass" if r.passed else "FAIL"
            if not r.evaluated:
                status = "skipped"
            out.append(f"{a:>8.4g}  {len(r.evaluated):>9d}  {len(r.skipped):>7d}  {r.max_residual:>12.3e}  {status}")
            if args.verbose:
                out.extend(f"{'':>8}  notice: {s.name} skipped ({s.note})" for s in r.skipped)
            else:
                groups = {}
                for s in r.skipped:
                    groups.setdefault(s.note, []).append(s.name)
                out.extend(f"{'':>8}  notice: skipped {', '.join(names)} ({note})" for note, names in groups.items())
            for bad in r.evaluated:
                if bad.status != "pass":
                    out.append(f"{'':>8}  {bad.name}: residual {bad.residual:.3e}")
        sys.stdout.write("\n".join(out) + "\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _resolve(ref):
    if not os.path.exists(ref) and ref in scen.bundled_names():
        return scen.bundled_scenario(ref)
    return ref


def _thread_cap():
    raw = os.environ.get("HEATCONTENT_THREADS", "")
    try:
        return max(1, int(raw)) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise ValidationError("HEATCONTENT_THREADS", f"not an integer: {raw!r}") from None


def cmd_scenario(args):
    if args.action == "list":
        for name in scen.bundled_names():
            sys.stdout.write(name + "\n")
        return EXIT_OK
    if not args.files:
        raise UsageError("scenario run needs at least one FILE or bundled name")
    # validate everything up front so configuration errors surface before any solve
    loaded = [scen.load_scenario(_resolve(f)) for f in args.files]
    workers = min(_thread_cap(), len(loaded))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", asymptotics.ExponentCollisionWarning)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                reports = list(pool.map(scen.run_scenario, loaded))
        else:
            reports = [scen.run_scenario(s) for s in loaded]
    if len(reports) == 1:
        text = reports[0].to_json(args.timing)
    else:
        text = _dumps([r.to_dict(args.timing) for r in reports])
    _write(args.out, text)
    if args.plot:
        for r in reports:
            if r.samples is not None:
                prefix = args.plot if len(reports) == 1 else f"{args.plot}-{r.scenario}"
                write_plot(prefix, r.samples, r.fitted, title=r.scenario)
    for r in reports:
        sys.stderr.write(f"{r.scenario}: {'pass' if r.passed else 'FAIL'}\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# --------------------------------------------------------------------------
# entry point


def build_parser():
    p = _Parser(prog="heatcontent", description="Heat content asymptotics with singular initial data.")
    p.add_argument("--error-json", action="store_true", help="report failures as JSON on stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("coeffs", help="closed-form boundary coefficients")
    c.add_argument("--alpha", required=True, help="real or complex (e.g. 0.3+0.2j)")
    c.add_argument("--bc", choices=("dirichlet", "robin"), default="dirichlet")
    c.add_argument("--jet", help="BoundaryJet JSON; default phi0 = rho0 = 1")
    c.add_argument("--interior", nargs=2, type=float, default=(0.0, 0.0), metavar=("I0", "I1"),
                   help="interior pairings folded in at alpha = 1")
    c.set_defaults(func=cmd_coeffs)

    s = sub.add_parser("simulate", help="heat content samples for a scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", default="-")
    s.add_argument("--plot", metavar="PREFIX")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit expansion coefficients to a samples CSV")
    f.add_argument("--samples", required=True)
    f.add_argument("--alpha", required=True)
    f.add_argument("--kmax", type=int, default=2)
    f.add_argument("--nmax", type=int, default=1)
    f.add_argument("--out", default="-")
    f.add_argument("--plot", metavar="PREFIX")
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("regularize", help="regularised interior pairing of a scenario")
    r.add_argument("--scenario", required=True)
    r.add_argument("--eps", type=float, default=0.1)
    r.set_defaults(func=cmd_regularize)

    v = sub.add_parser("verify", help="check the coefficient relations on an alpha grid")
    v.add_argument("--alpha-grid", required=True)
    v.add_argument("--json", action="store_true")
    v.add_argument("--verbose", action="store_true")
    v.set_defaults(func=cmd_verify)

    sc = sub.add_parser("scenario", help="run scenario pipelines")
    sc.add_argument("action", choices=("run", "list"))
    sc.add_argument("files", nargs="*")
    sc.add_argument("--out", default="-")
    sc.add_argument("--plot", metavar="PREFIX")
    sc.add_argument("--timing", action="store_true", help="include runtimes (output no longer deterministic)")
    sc.set_defaults(func=cmd_scenario)
    return p


def _fail(args_json, code, kind, message, extra=None):
    if args_json:
        payload = {"error": kind, "message": message, "exit_code": code}
        payload.update(extra or {})
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        sys.stderr.write(f"heatcontent: {kind}: {message}\n")
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    error_json = "--error-json" in argv
    argv = [a for a in argv if a != "--error-json"]
    # let "--alpha-grid -1:1.9:0.1" through without argparse taking -1 for a flag
    for i, a in enumerate(argv[:-1]):
        if a == "--alpha-grid":
            argv[i:i + 2] = [f"--alpha-grid={argv[i + 1]}"]
            break
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        return _fail(error_json, EXIT_USAGE, "usage", str(exc))
    except ValidationError as exc:
        return _fail(error_json, EXIT_USAGE, "validation", str(exc), {"field": exc.field})
    except OSError as exc:
        return _fail(error_json, EXIT_USAGE, "io", str(exc))
    except json.JSONDecodeError as exc:
        return _fail(error_json, EXIT_USAGE, "validation", str(exc), {"field": "<root>"})
    except scen.ScenarioRunError as exc:
        return _fail(error_json, EXIT_NUMERIC, type(exc.cause).__name__, str(exc), {"scenario": exc.scenario})
    except (ConvergenceError, PoleError, DomainError, HeatContentError, np.linalg.LinAlgError) as exc:
        return _fail(error_json, EXIT_NUMERIC, type(exc).__name__, str(exc))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
