"""Command-line entry point.

    z2automaton run <experiment.json> [--workers N] [--seed S] [--out DIR]
    z2automaton summarize <run-dir>
    z2automaton oracle-check --L <n> [--trajectories K] [--t-max T] [--p P]

Exit codes: 0 success, 1 usage/input error, 2 acceptance failure,
3 runtime error.  Z2AUTOMATON_WORKERS sets the default worker count.
"""

from __future__ import annotations

import argparse
import sys

from .parallel import default_workers
from .rng import derive_seed
from .runner import ExperimentError, run_experiment, summarize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ACCEPTANCE = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="z2automaton",
                     description="hybrid automaton circuit experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment file")
    p_run.add_argument("experiment", help="JSON experiment description")
    p_run.add_argument("--workers", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
    p_run.add_argument("--out", default=None, help="output directory")

    p_sum = sub.add_parser("summarize", help="print fits and pass/fail "
                                             "for a finished run")
    p_sum.add_argument("run_dir")

    p_oc = sub.add_parser("oracle-check", help="co-run the tableau against "
                                               "the exact oracle")
    p_oc.add_argument("--L", type=int, required=True)
    p_oc.add_argument("--trajectories", type=int, default=20)
    p_oc.add_argument("--t-max", type=int, default=30)
    p_oc.add_argument("--p", type=float, default=0.5)
    p_oc.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            workers = args.workers if args.workers is not None else default_workers()
            manifest = run_experiment(args.experiment, out_dir=args.out,
                                      workers=workers,
                                      seed_override=args.seed)
            failed = [pt for pt in manifest.points if pt.get("status") != "ok"]
            for pt in manifest.points:
                status = pt.get("status")
                print(f"point {pt['label']}: {status}"
                      + (f" ({pt.get('error')})" if status != "ok" else ""))
            print(f"wrote {sum(len(pt.get('files', [])) for pt in manifest.points)} "
                  f"tables in {manifest.wall_time_s:.1f}s")
            return EXIT_RUNTIME if failed else EXIT_OK
        if args.command == "summarize":
            ok = summarize(args.run_dir)
            return EXIT_OK if ok else EXIT_ACCEPTANCE
        if args.command == "oracle-check":
            from .circuits import cosim_max_entropy_gap
            gap = 0.0
            for i in range(args.trajectories):
                gap = max(gap, cosim_max_entropy_gap(
                    args.L, args.p, args.t_max,
                    derive_seed(args.seed, "oracle_check", i)))
            print(f"max |dS| = {gap:.3g}")
            return EXIT_OK if gap <= 1e-9 else EXIT_ACCEPTANCE
    except ExperimentError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_USAGE  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
