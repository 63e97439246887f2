"""Command-line entry point: ``bench run|suite|plot``.

Exit codes: 0 success, 1 scenario failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import __version__
from ..errors import InvalidInputError, WorldParseError
from .plot import render_svg
from .scenario import (ScenarioError, atomic_write, load_result_dir, load_scenario,
                       run_scenario)
from .suite import load_suite, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _zero_clock() -> float:
    return 0.0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bench", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("scenario", type=Path)
    r.add_argument("--planner", choices=("bow", "dwa"))
    r.add_argument("--seed", type=int)
    r.add_argument("--out", type=Path, default=Path("bench_out"))
    r.add_argument("--plot", action="store_true", help="also write trajectory.svg")
    r.add_argument("--no-timing", action="store_true",
                   help="record zero planning time (byte-reproducible output)")

    s = sub.add_parser("suite", help="run a benchmark suite")
    s.add_argument("suite", type=Path)
    s.add_argument("--out", type=Path, default=Path("bench_out"))
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--no-timing", action="store_true",
                   help="record zero planning time (byte-reproducible output)")
    s.add_argument("--quiet", action="store_true")

    pl = sub.add_parser("plot", help="render a result directory to SVG")
    pl.add_argument("result_dir", type=Path)
    pl.add_argument("--output", type=Path, help="default: <result_dir>/trajectory.svg")
    return p


def _cmd_run(args) -> int:
    scn = load_scenario(args.scenario).with_overrides(planner=args.planner, seed=args.seed)
    clock = _zero_clock if args.no_timing else None
    outcome = (run_scenario(scn, args.out, clock) if clock
               else run_scenario(scn, args.out))
    if args.plot:
        _cmd_plot(argparse.Namespace(result_dir=args.out, output=None))
    m = outcome.metrics
    print(json.dumps(m.to_dict(), sort_keys=True))
    ok = m.success and not (m.max_constraint > 0)
    return EXIT_OK if ok or not scn.mandatory else EXIT_FAIL


def _cmd_suite(args) -> int:
    if args.jobs < 1:
        raise InvalidInputError("--jobs must be >= 1")
    suite = load_suite(args.suite)

    def progress(rec):
        if args.quiet:
            return
        status = rec.error or (rec.metrics.termination if rec.metrics else "?")
        print(f"{rec.env} {rec.planner} seed={rec.seed}: {status}", file=sys.stderr)

    result = run_suite(suite, args.out, args.jobs, _zero_clock if args.no_timing else None,
                       progress)
    sys.stdout.write(result.csv_text())
    for env, planner in result.failed_mandatory:
        print(f"mandatory scenario failed: {env} ({planner})", file=sys.stderr)
    return result.exit_status


def _cmd_plot(args) -> int:
    world, states, doc = load_result_dir(args.result_dir)
    text = render_svg(world, states, float(doc["dt"]), float(doc.get("v_max", 1.0)),
                      doc.get("goal"))
    atomic_write(args.output or Path(args.result_dir) / "trajectory.svg", text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "suite": _cmd_suite, "plot": _cmd_plot}
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InvalidInputError, WorldParseError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
