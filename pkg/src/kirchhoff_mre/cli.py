"""Batch command-line front end.

Every subcommand writes deterministic CSV/JSON (floats as ``%.15e``) and
exits 0 on success, 1 on invalid input, 2 on a singular evaluation and 3 when
a quadrature budget or the solver's resonance check stops the run.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import assembly, mre, oracles, thermal
from .errors import MREError
from .graph import EdgePoint, decimal_string, load_graph, parse_point, validate
from .terms import as_fraction

__all__ = ["run", "main", "emit_plotdata", "build_parser"]

FLOAT = "%.15e"


def _f(value) -> str:
    return FLOAT % float(value)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    exit_code = 1


# --- output helpers -------------------------------------------------------

def _write_text(path: str | None, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, Fraction):
        return decimal_string(obj)
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return str(obj)


def emit_plotdata(report, path: str | None = None, column: str | None = None) -> str:
    """Two-column CSV ``k,value`` for one series of a report; returns the text.

    ``report`` may be a :class:`~kirchhoff_mre.mre.NormReport` (default
    column ``sup_norm``), a thermal Neumann result (its increments) or any
    iterable of ``(k, value)`` pairs.
    """
    if isinstance(report, mre.NormReport):
        pairs = report.series(column or "sup_norm")
    elif isinstance(report, thermal.ThermalNeumannResult):
        pairs = list(enumerate(report.increments))
    else:
        pairs = list(report or ())
    text = _csv_text(["k", "value"], [[k, _f(v)] for k, v in pairs])
    if path is not None:
        _write_text(path, text)
    return text


# --- field point parsing --------------------------------------------------

def _parse_grid(text: str) -> list[EdgePoint]:
    """``edge:start:stop:count`` with ``count`` equally spaced points, ends included."""
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"grid {text!r} must be edge:start:stop:count")
    edge, start, stop, count = parts
    a, b, n = Fraction(start), Fraction(stop), int(count)
    if n < 1:
        raise ValueError(f"grid {text!r}: count must be positive")
    if n == 1:
        return [EdgePoint(edge, a)]
    return [EdgePoint(edge, a + (b - a) * i / (n - 1)) for i in range(n)]


def _field_points(args) -> list[EdgePoint]:
    points = [parse_point(p) for p in args.field or ()]
    for text in args.grid or ():
        points.extend(_parse_grid(text))
    if not points:
        raise ValueError("no field points: give --field or --grid")
    return points


def _series(args, g, source, formulation=None):
    if getattr(args, "closed_form_star", False):
        return mre.series_from_closed_form(mre.solve_star(g, source))
    form = mre.Formulation(formulation or args.formulation)
    return mre.neumann_sum(g, source, args.order, form, s0=as_fraction(getattr(args, "s0", "0")))


# --- subcommands ----------------------------------------------------------

def _cmd_validate(args) -> int:
    g = load_graph(args.graph)
    problems = validate(g)
    if problems:
        raise MREError("; ".join(problems))
    hubs = [v for v in g.vertices if g.degree(v) >= 2] or list(g.vertices)
    degrees = " ".join(f"d_{v}={g.degree(v)}" for v in hubs)
    total = sum(e.length for e in g.edges)
    print(f"valid: {len(g.vertices)} vertices, {len(g.edges)} edges, {degrees}, "
          f"total length {decimal_string(total)}")
    return 0


def _cmd_kernel(args) -> int:
    g = load_graph(args.graph)
    source = parse_point(args.source)
    series = _series(args, g, source)
    rows = []
    for t in args.t:
        t = as_fraction(t)
        for p in _field_points(args):
            cv = assembly.cylinder_values(series, t, p)
            ge = cv.green
            for k, ds in enumerate(series.orders):
                rows.append([decimal_string(t), p.edge, decimal_string(p.x), ds.order,
                             _f(ge.contributions[k]), _f(ge.cumulative_by_order[k]),
                             _f(cv.tbar_by_order[k]), _f(cv.T_by_order[k])])
    header = ["t", "edge", "x", "order", "gamma_contrib", "G_cumulative", "Tbar", "T"]
    _write_text(args.out, _csv_text(header, rows))
    return 0


def _cmd_densities(args) -> int:
    g = load_graph(args.graph)
    series = _series(args, g, parse_point(args.source))
    _write_text(args.out, _json_text(series.to_json()))
    return 0


def _cmd_images(args) -> int:
    g = load_graph(args.graph)
    if not g.is_interval():
        raise MREError(f"{args.graph}: the image ladder is only available for a single interval")
    source = parse_point(args.source)
    edge = g.edges[0]
    if source.edge != edge.id:
        raise MREError(f"source {source} is not on edge {edge.id}")
    series = mre.neumann_sum(g, source, args.order, mre.Formulation.NU_PRIME)
    ladder = oracles.image_interval(edge.length, source.x, args.order)
    rows = []
    all_match = True
    for ds in series.orders:
        got = assembly.edge_images(ds, edge.id)
        want = ladder.at_order(ds.order)
        for p in sorted(set(got) | set(want)):
            a = got.get(p)
            b = want.get(p)
            match = a is not None and b is not None and a.is_rational() and a.rational() == b
            all_match &= match
            rows.append([ds.order, decimal_string(p), "" if a is None else str(a),
                         "" if b is None else str(b), "true" if match else "false"])
    header = ["order", "position", "mre_amplitude", "image_amplitude", "exact_match"]
    _write_text(args.out, _csv_text(header, rows))
    print(f"exact_match: {'all' if all_match else 'NOT all'} of {len(rows)} images", file=sys.stderr)
    return 0


def _thermal_params(args) -> thermal.ThermalParams:
    if (args.T is None) == (args.beta is None):
        raise ValueError("give exactly one of --T and --beta")
    return thermal.ThermalParams(args.T) if args.T is not None else \
        thermal.ThermalParams.from_beta(args.beta)


def _cmd_thermal(args) -> int:
    params = _thermal_params(args)
    L, y0, s0 = as_fraction(args.L), as_fraction(args.y0), as_fraction(args.s0)
    direct = thermal.nystrom_solve(L, y0, s0, params, args.M, zero_mode=args.zero_mode)
    series = thermal.thermal_neumann(L, y0, s0, params, args.M, args.N_max, tol=args.tol)
    rows = []
    gap = 0.0
    for m, t in enumerate(direct.mu0.nodes):
        a0, aL = direct.mu0.values[m], direct.muL.values[m]
        b0, bL = series.mu0.values[m], series.muL.values[m]
        gap = max(gap, abs(a0 - b0), abs(aL - bL))
        rows.append([m, _f(t), _f(a0), _f(aL), _f(b0), _f(bL)])
    header = ["index", "t", "mu0", "muL", "mu0_neumann", "muL_neumann"]
    _write_text(args.out, _csv_text(header, rows))
    summary = direct.summary()
    summary.update({
        "neumann_orders": len(series.increments) - 1,
        "neumann_last_increment": series.increments[-1],
        "neumann_ratio_estimate": series.ratio_estimate,
        "max_difference": gap,
    })
    if args.summary:
        _write_text(args.summary, _json_text(summary))
    if args.plot:
        emit_plotdata(series, args.plot)
    return 0


def _cmd_diagnostics(args) -> int:
    g = load_graph(args.graph)
    series = _series(args, g, parse_point(args.source))
    report = mre.norm_report(series, weight=args.weight, derivative=args.derivative)
    header = ["order", "terms", "max_abs_coef", "min_distance", "sup_norm", "weighted_l1"]
    rows = [[r["order"], r["terms"], _f(r["max_abs_coef"]), _f(r["min_distance"]),
             _f(r["sup_norm"]), _f(r["weighted_l1"])] for r in report.rows]
    _write_text(args.out, _csv_text(header, rows))
    exponent = "n/a" if report.decay_exponent is None else _f(report.decay_exponent)
    print(f"classification: {report.classification} (decay exponent {exponent})",
          file=sys.stderr if args.out in (None, "-") else sys.stdout)
    if args.plot:
        emit_plotdata(report, args.plot, args.plot_column)
    return 0


# --- parser ---------------------------------------------------------------

def _graph_source_order(p, order_default=6):
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--source", required=True, help="source point edge:coordinate")
    p.add_argument("--order", type=int, default=order_default, help="highest MRE order N_max")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kirchhoff-mre", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a graph file and print a one-line report")
    p.add_argument("graph")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("kernel", help="Green function and cylinder kernels, per order (CSV)")
    _graph_source_order(p, 2)
    p.add_argument("--field", action="append", help="field point edge:coordinate (repeatable)")
    p.add_argument("--grid", action="append", help="edge:start:stop:count (repeatable)")
    p.add_argument("--t", action="append", required=True, help="time (repeatable)")
    p.add_argument("--formulation", default="NU_PRIME", choices=["NU", "NU_PRIME"])
    p.add_argument("--closed-form-star", action="store_true",
                   help="use the exact infinite-star solution instead of the series")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("densities", help="density series as JSON")
    _graph_source_order(p)
    p.add_argument("--formulation", default="NU_PRIME", choices=["NU", "NU_PRIME"])
    p.add_argument("--s0", default="0", help="source time")
    p.add_argument("--closed-form-star", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_densities)

    p = sub.add_parser("images", help="MRE image charges against the reflection ladder (CSV)")
    _graph_source_order(p, 1)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_images)

    p = sub.add_parser("thermal", help="Nystrom solve and Neumann series on the time circle")
    p.add_argument("--L", default="1")
    p.add_argument("--y0", required=True)
    p.add_argument("--s0", default="0")
    p.add_argument("--T", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--M", type=int, default=128)
    p.add_argument("--N-max", dest="N_max", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--zero-mode", default="deflate", choices=["deflate", "raise"])
    p.add_argument("--out", help="node table CSV")
    p.add_argument("--summary", help="JSON summary path")
    p.add_argument("--plot", help="two-column CSV of Neumann increments")
    p.set_defaults(func=_cmd_thermal)

    p = sub.add_parser("diagnostics", help="per-order norm table and classification")
    _graph_source_order(p)
    p.add_argument("--formulation", default="NU_PRIME", choices=["NU", "NU_PRIME"])
    p.add_argument("--weight", default="none", choices=["none", "rho"])
    p.add_argument("--derivative", type=int, default=0, choices=[0, 1])
    p.add_argument("--out")
    p.add_argument("--plot", help="two-column CSV of one norm column")
    p.add_argument("--plot-column", default="sup_norm")
    p.set_defaults(func=_cmd_diagnostics)
    return parser


def run(argv=None) -> int:
    """Parse ``argv`` and run the subcommand; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (MREError, _UsageError) as exc:
        code, name, text = exc.exit_code, type(exc).__name__.lstrip("_"), str(exc)
    except (ValueError, KeyError, OSError, ZeroDivisionError) as exc:
        code, name, text = 1, type(exc).__name__, str(exc)
    message = " ".join(text.split()) or name
    print(f"error: {name}: {message}", file=sys.stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
