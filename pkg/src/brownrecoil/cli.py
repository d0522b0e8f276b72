"""
Command line entry point.

    brownrecoil run <scenario> --out <dir> [--set key=value]...
    brownrecoil compare <dirA> <dirB> --column <c> --tol <x>
    brownrecoil list

``<scenario>`` is a TOML file or ``builtin:<name>`` for a bundled one.
"""
import argparse
import logging
import sys

from .errors import ColumnMissing, DiffusionError, ParseError, TimeAxisMismatch
from .runner import compare, run
from .scenario import bundled

EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_ENGINE = 3
EXIT_COMPARE_INPUT = 4


def build_parser():
    parser = argparse.ArgumentParser(prog="brownrecoil", description=__doc__.splitlines()[1])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every engine of a scenario")
    p.add_argument("scenario")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a scenario key, e.g. params.D=0.25 (repeatable)")

    c = sub.add_parser("compare", help="compare one column of two runs")
    c.add_argument("run_a", help="run directory or CSV file")
    c.add_argument("run_b", help="run directory or CSV file")
    c.add_argument("--column", required=True)
    c.add_argument("--tol", type=float, required=True)
    c.add_argument("--relative", action="store_true", help="compare relative differences")
    c.add_argument("--engine-a", help="pick <name>_<engine>.csv inside run_a")
    c.add_argument("--engine-b", help="pick <name>_<engine>.csv inside run_b")

    sub.add_parser("list", help="list bundled scenarios")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list":
        for name in bundled():
            print(f"builtin:{name}")
        return 0
    if args.command == "run":
        try:
            manifest = run(args.scenario, args.out, args.overrides)
        except ParseError as exc:
            print(f"parse error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        except DiffusionError as exc:
            print(f"engine error: {exc}", file=sys.stderr)
            return EXIT_ENGINE
        print(f"{manifest.scenario}: wrote {', '.join(manifest.outputs)} to {args.out}")
        return 0
    try:
        report = compare(args.run_a, args.run_b, args.column, args.tol, args.relative,
                         args.engine_a, args.engine_b)
    except (ColumnMissing, TimeAxisMismatch) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPARE_INPUT
    print(report.format())
    return 0 if report.passed else EXIT_FAIL
