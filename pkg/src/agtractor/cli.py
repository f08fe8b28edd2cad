"""Command line entry point.

Exit codes: 0 everything passed, 1 some check failed or an input was
refused, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .chartfile import ChartParseError, load_chart
from .poly import DegreeCapError, degree_cap, get_degree_cap
from .report import PreconditionError, dumps, to_jsonable

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
N_RANGE = range(3, 7)


def _n_arg(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if n not in N_RANGE:
        raise argparse.ArgumentTypeError(f"n must lie in [{N_RANGE.start}, {N_RANGE.stop - 1}]")
    return n


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="agtractor",
        description="Exact tractor calculus for almost Grassmannian structures of type (2,n).",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--degree-cap", type=_nonneg, default=None, help="maximum polynomial degree (default 12)")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite and write a JSON report")
    v.add_argument("--suite", choices=["all", "algebra", "weyl", "bgg", "loci"], default="all")
    v.add_argument("--n", type=_n_arg, default=3)
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--report", help="output path for the JSON report")
    v.add_argument("--timing", action="store_true", help="include wall times (breaks byte-identical output)")

    f = sub.add_parser("flat-basis", help="solve the first BGG operator on the flat model")
    f.add_argument("--bundle", choices=["tractor", "cotractor"], required=True)
    f.add_argument("--n", type=_n_arg, required=True)
    f.add_argument("--degree", type=_nonneg, default=3)
    f.add_argument("--json", dest="json_path", help="also write the basis as JSON")

    z = sub.add_parser("zero-locus", help="analyse the zero set of a section from a chart file")
    z.add_argument("--input", required=True)
    z.add_argument("--section", required=True)
    z.add_argument("--points", required=True)
    z.add_argument("--report", help="output path for the JSON report")
    return p


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_verify(args) -> int:
    from .suites import run_suite

    reports = run_suite(args.suite, args.n, args.seed)
    counts: dict = {}
    for r in reports:
        counts[r.status] = counts.get(r.status, 0) + 1
        print(r)
    payload = {
        "suite": args.suite,
        "n": args.n,
        "seed": args.seed,
        "version": __version__,
        "degree_cap": get_degree_cap(),
        "summary": dict(sorted(counts.items())),
        "reports": [r.to_json(include_timing=args.timing) for r in reports],
    }
    if args.report:
        _write(args.report, dumps(payload))
    failed = counts.get("fail", 0)
    print(f"{len(reports)} checks, {failed} failed")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_flat_basis(args) -> int:
    from .bgg import solve_bgg_polynomial
    from .weyl import flat_data

    basis = solve_bgg_polynomial(flat_data(args.n), args.bundle, args.degree)
    print(f"bundle={args.bundle} n={args.n} degree={args.degree} dimension={basis.dimension}")
    for k, s in enumerate(basis.basis):
        print(f"  [{k}] " + ", ".join(str(p) for p in s.comps.flat))
    if args.json_path:
        _write(args.json_path, dumps(basis.to_json()))
    if args.degree >= 1:
        expected = args.n + 2
    else:
        expected = args.n if args.bundle == "tractor" else 2
    if basis.dimension != expected:
        print(f"expected dimension {expected}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_zero_locus(args) -> int:
    from .bgg import bgg_operator
    from .loci import zero_locus_analysis

    chart = load_chart(args.input)
    if args.section not in chart.sections:
        raise ChartParseError("$.sections", f"no section named {args.section!r}")
    if args.points not in chart.points:
        raise ChartParseError("$.points", f"no point set named {args.points!r}")
    s = chart.sections[args.section]
    residual = bgg_operator(chart.data, s)
    if not residual.is_zero():
        print(f"refused: section {args.section!r} is not a solution of D", file=sys.stderr)
        _write(args.report, dumps({"status": "refused", "residual": to_jsonable(residual)}))
        return EXIT_FAIL
    try:
        rep = zero_locus_analysis(chart.data, s, chart.points[args.points])
    except ValueError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_FAIL
    _write(args.report, dumps(rep.to_json()))
    print(f"codimension={rep.codimension} points={len(rep.points)} status={'pass' if rep.passed else 'fail'}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "flat-basis": cmd_flat_basis, "zero-locus": cmd_zero_locus}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cap = args.degree_cap if args.degree_cap is not None else get_degree_cap()
    try:
        with degree_cap(cap):
            return COMMANDS[args.command](args)
    except ChartParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DegreeCapError, PreconditionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
