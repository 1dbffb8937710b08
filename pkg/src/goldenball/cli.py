"""Command line entry point (``goldenball``).

Exit codes: 0 success, 1 invalid input (plan, arguments, instance files),
2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .baselines import ALGORITHMS
from .bench import (BenchPlan, PlanError, compare, format_table, read_rows, resolve_instance,
                    run_plan, summarize, teams_study)
from .core import GoldenBallError
from .instances import InstanceFormatError, load_tsplib, serialize_instance

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _summary_text(rows) -> str:
    return format_table(summarize(rows), ("instance", "algorithm", "runs", "mean", "std", "best",
                                          "mean_time", "mean_evals"))


def cmd_run(args) -> int:
    if args.plan:
        plan = BenchPlan.from_json(Path(args.plan).read_text())
        if args.out:
            plan.output = args.out
        if args.jobs:
            plan.parallelism = args.jobs
    else:
        if not args.instances or not args.algorithms:
            raise PlanError("give --plan or both --instances and --algorithms")
        plan = BenchPlan(args.instances, args.algorithms, args.runs, args.seed, args.out,
                         args.jobs or 1)
    progress = None
    if args.verbose:
        def progress(r):
            print(f"{r['algorithm']:>6} {r['instance']:<20} trial {r['trial']:>3} "
                  f"best {r['best_f']} {r['error']}", file=sys.stderr)
    rows = run_plan(plan, resume=args.resume, progress=progress)
    print(_summary_text(rows))
    failed = [r for r in rows if r["error"]]
    if failed:
        print(f"{len(failed)} trial(s) failed; see the error column", file=sys.stderr)
    return EXIT_OK


def cmd_compare(args) -> int:
    rows = read_rows(args.results)
    report = compare(rows, args.control, minimize=not args.maximize)
    print(report.text())
    if args.out:
        report.write(args.out)
    return EXIT_OK


def cmd_teams(args) -> int:
    table = teams_study(args.instances, args.runs, args.seed, args.out, args.jobs)
    print(format_table(table, ("version", "instance", "mean", "mean_time")))
    return EXIT_OK


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        print(text)


def cmd_generate(args) -> int:
    ref = {"acvrp": f"acvrp:{args.name}:{args.seed}", "matspspd": f"matspspd:{args.name}:{args.k}",
           "vrpb": f"vrpb:{args.name}"}[args.family]
    _emit(serialize_instance(resolve_instance(ref)), args.out)
    return EXIT_OK


def cmd_parse(args) -> int:
    _emit(serialize_instance(load_tsplib(args.file)), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="goldenball", description="Golden Ball metaheuristic and comparison harness.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run an (algorithm x instance x trial) plan")
    r.add_argument("--plan", help="JSON plan file")
    r.add_argument("--instances", nargs="+", help="bundled names, files or generator refs")
    r.add_argument("--algorithms", nargs="+", choices=ALGORITHMS, type=str.upper)
    r.add_argument("--runs", type=int, default=40)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", help="output directory for runs.csv / runs.json")
    r.add_argument("--jobs", type=int, default=None, help="worker processes (default 1)")
    r.add_argument("--resume", action="store_true", help="skip trials already in runs.csv")
    r.add_argument("-v", "--verbose", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="z marks, Friedman and Holm from a runs.csv")
    c.add_argument("results")
    c.add_argument("--control", default="GB")
    c.add_argument("--maximize", action="store_true")
    c.add_argument("--out", help="directory for CSV tables and report.txt")
    c.set_defaults(func=cmd_compare)

    t = sub.add_parser("teams-study", help="GB with 2x24, 4x12, 6x8 and 8x6 leagues")
    t.add_argument("--instances", nargs="+", required=True)
    t.add_argument("--runs", type=int, default=10)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")
    t.add_argument("--jobs", type=int, default=1)
    t.set_defaults(func=cmd_teams)

    g = sub.add_parser("generate", help="write a generated rich-VRP instance as JSON")
    g.add_argument("family", choices=("acvrp", "matspspd", "vrpb"))
    g.add_argument("name", help="benchmark row (acvrp), ATSP source (matspspd) or CVRP ref (vrpb)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--k", type=int, default=4, help="vehicles (matspspd)")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("parse", help="convert a TSPLIB file to instance JSON")
    s.add_argument("file")
    s.add_argument("--out")
    s.set_defaults(func=cmd_parse)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PlanError, InstanceFormatError, FileNotFoundError, ValueError, KeyError,
            json.JSONDecodeError) as exc:
        print(f"goldenball: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (GoldenBallError, Exception) as exc:  # noqa: BLE001
        print(f"goldenball: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
