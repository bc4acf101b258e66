"""Command-line entry point ``geophase``.

Exit codes: 0 ok, 2 scenario/schema error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import NumericalError, ScenarioError
from .harness import emit, load_scenario, noise_sweep, run_scenario, to_json

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _parser():
    p = argparse.ArgumentParser(prog="geophase", description="Geometric phase gate experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evolve a scenario and run its analyses")
    run.add_argument("scenario")
    run.add_argument("--out", help="report path; .csv selects CSV, anything else JSON (default: stdout)")
    run.add_argument("--steps", type=int, help="steps per segment (overrides the file)")
    run.add_argument("--tol", type=float, help="refine until U(tau) changes by less than this")

    sweep = sub.add_parser("sweep", help="Monte-Carlo noise sweep")
    sweep.add_argument("scenario")
    sweep.add_argument("--seed", type=int, help="noise seed (overrides the file)")
    sweep.add_argument("--out")
    sweep.add_argument("--steps", type=int)
    sweep.add_argument("--workers", type=int, default=1, help="threads for independent samples")

    val = sub.add_parser("validate", help="check a scenario file against the schema")
    val.add_argument("scenario")
    return p


def _write(report, out):
    if out is None:
        sys.stdout.write(to_json(report))
    else:
        emit(report, out)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        if args.command == "validate":
            print(f"{args.scenario}: ok")
            return EXIT_OK
        if args.command == "run":
            scenario = scenario.with_overrides(steps=args.steps, tol=args.tol)
            _write(run_scenario(scenario), args.out)
        else:
            scenario = scenario.with_overrides(steps=args.steps, seed=args.seed)
            _write(noise_sweep(scenario, workers=args.workers), args.out)
    except ScenarioError as exc:
        print(f"geophase: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NumericalError as exc:
        print(f"geophase: numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"geophase: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
