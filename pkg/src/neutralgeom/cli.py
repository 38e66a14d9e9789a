"""Command-line front end: ``neutralgeom {generate,classify,sample,selftest}``.

Exit codes: 0 success, 1 error (bad spec, failed generation, IO),
2 a requested verdict or acceptance criterion does not hold.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import fields

from .errors import NeutralGeomError, SpecError
from .residuals import VERDICT_NAMES, Tolerances, evaluate

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2
CSV_COLUMNS = ("s", "t", "x1", "x2", "x3", "x4", "K", "L_or_blank", "res_bicons", "res_biharm", "HH")
MIN_GRID = 5


def _grid(text):
    try:
        ns, nt = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 41x41, got {text!r}")
    if ns < MIN_GRID or nt < MIN_GRID:
        raise argparse.ArgumentTypeError(f"grid dimensions must be at least {MIN_GRID}")
    return ns, nt


def _rect(text):
    try:
        s0, s1, t0, t1 = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"rect must look like s0,s1,t0,t1, got {text!r}")
    if not (s1 > s0 and t1 > t0):
        raise argparse.ArgumentTypeError(f"degenerate rectangle {text!r}")
    return s0, s1, t0, t1


def _tol(text):
    name, sep, value = text.partition("=")
    known = {f.name for f in fields(Tolerances)}
    if not sep or name not in known:
        raise argparse.ArgumentTypeError(f"--tol expects NAME=VALUE with NAME in {sorted(known)}")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--tol {name}: {value!r} is not a number")


def _expect(text):
    name, sep, value = text.partition("=")
    name = name.replace("-", "_")
    if name not in VERDICT_NAMES:
        raise argparse.ArgumentTypeError(f"unknown verdict {name!r}; choose from {VERDICT_NAMES}")
    value = value.lower() if sep else "true"
    if value not in ("true", "false"):
        raise argparse.ArgumentTypeError(f"--expect {name}: value must be true or false")
    return name, value == "true"


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; exit code 2 is reserved for verdict failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(
        prog="neutralgeom",
        description="Construct and verify quasi-minimal biconservative surfaces in neutral 4-space.")
    sub = parser.add_subparsers(dest="command", required=True)

    def source(p):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--builtin", metavar="NAME", help="built-in instance (i-st, i-exp, ii-trig, iii-I3, generic)")
        g.add_argument("--spec", metavar="PATH", help="family spec JSON file")

    def sweep(p):
        p.add_argument("--grid", type=_grid, default=(41, 41), metavar="NSxNT")
        p.add_argument("--rect", type=_rect, default=None, metavar="s0,s1,t0,t1")
        p.add_argument("--jets", choices=("analytic", "fd"), default="analytic")
        p.add_argument("--fd-step", type=float, default=None, metavar="H")
        p.add_argument("--tol", type=_tol, action="append", default=[], metavar="NAME=VALUE")
        p.add_argument("-o", "--output", metavar="PATH", help="output file (default: stdout)")

    p = sub.add_parser("generate", help="generate and validate a family instance")
    source(p)
    p.add_argument("-o", "--output", metavar="PATH")

    p = sub.add_parser("classify", help="residual sweep, verdicts and JSON report")
    source(p)
    sweep(p)
    p.add_argument("--expect", type=_expect, action="append", default=[], metavar="VERDICT[=true|false]")

    p = sub.add_parser("sample", help="plot-ready CSV grid")
    source(p)
    sweep(p)

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--jets", choices=("analytic", "fd"), default="analytic")
    p.add_argument("--tol-scale", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=41)
    return parser


def load_surface(args):
    from .families import builtin, generate, parse_family_spec

    if args.builtin:
        return builtin(args.builtin)
    try:
        with open(args.spec, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{args.spec}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return generate(parse_family_spec(data))


def _tolerances(args):
    tol = Tolerances() if args.jets == "analytic" else Tolerances.for_fd()
    for name, value in args.tol:
        setattr(tol, name, value)
    return tol


def _report(args):
    surface = load_surface(args)
    ns, nt = args.grid
    return evaluate(surface, ns, nt, rect=args.rect, jets=args.jets, fd_step=args.fd_step,
                    tolerances=_tolerances(args))


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_generate(args):
    surface = load_surface(args)
    out = {
        "name": surface.name,
        "family": surface.family,
        "spec_hash": surface.spec_hash,
        "domain": list(surface.domain),
        "info": surface.info,
    }
    if surface.validation is not None:
        out["aggregates"] = surface.validation.aggregates()
        out["verdicts"] = surface.validation.verdicts()
    _write(args.output, json.dumps(out, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_classify(args):
    """Report JSON goes to ``-o`` (or stdout); the verdict table to the other stream."""
    report = _report(args)
    verdicts = report.verdicts()
    _write(args.output, report.to_json(indent=1, sort_keys=True) + "\n")
    table = sys.stdout if args.output else sys.stderr
    for name in VERDICT_NAMES:
        print(f"{name:15s} {str(verdicts[name]).lower()}", file=table)
    failed = [name for name, want in args.expect if verdicts[name] != want]
    if failed:
        print(f"verdict(s) not as expected: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK


def _num(x):
    return "" if x is None or not math.isfinite(x) else repr(float(x))


def sample_csv(report):
    """CSV text for a report; identical reports give identical bytes."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    x = report.values["x"]
    for k in range(len(report.s)):
        writer.writerow([
            _num(report.s[k]), _num(report.t[k]), *(_num(v) for v in x[k]),
            _num(report.values["K"][k]), _num(report.values["L"][k]),
            _num(report.residuals["biconservative"][k]), _num(report.residuals["biharmonic"][k]),
            _num(report.values["HH"][k]),
        ])
    return buf.getvalue()


def cmd_sample(args):
    _write(args.output, sample_csv(_report(args)))
    return EXIT_OK


def cmd_selftest(args):
    from .acceptance import run_suite

    results = run_suite(jets=args.jets, tol_scale=args.tol_scale, grid=args.grid, out=print)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERDICT


COMMANDS = {"generate": cmd_generate, "classify": cmd_classify, "sample": cmd_sample,
            "selftest": cmd_selftest}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (NeutralGeomError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
