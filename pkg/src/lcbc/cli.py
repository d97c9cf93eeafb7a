"""Command-line front end: ``lcbc <command> ...``.

Structured results go to stdout as JSON (CSV for the caching sweep); logs go
to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from .caching import CachingError, make_grid, sweep_csv, tradeoff_sweep
from .decomp import build_atlas
from .instance import InvalidInstance, LcbcInstance
from .ratlp import fmt
from .scheme import LpInfeasible, build_lp, plan_instance, solve_instance
from .simulate import measure_rate_distribution, run

EXIT_USAGE, EXIT_DECODE, EXIT_INVALID, EXIT_INFEASIBLE = 1, 2, 3, 4
FIXTURES = ("fig1_k2.json", "toy_k4.json", "mds_k3.json")

log = logging.getLogger("lcbc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_seed() -> int:
    env = os.environ.get("LCBC_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"LCBC_SEED={env!r} is not an integer")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=1) + "\n")


def cmd_decompose(args) -> int:
    inst = LcbcInstance.load(args.instance)
    atlas = build_atlas([inst.U(k) for k in range(1, inst.K + 1)])
    _emit(atlas.to_json())
    return 0


def cmd_solve(args) -> int:
    inst = LcbcInstance.load(args.instance)
    if args.dump_lp:
        _emit(build_lp(inst, subset_cap=args.subset_cap).to_json())
        return 0
    solved = solve_instance(inst, subset_cap=args.subset_cap)
    _emit(solved.to_json())
    return 0


def cmd_build(args) -> int:
    inst = LcbcInstance.load(args.instance)
    res = plan_instance(inst, seed=args.seed, mixing=args.mixing)
    out = res.plan.to_json()
    out["load"] = fmt(res.solved.load)
    out["verification"] = res.report.to_json()
    _emit(out)
    return 0 if res.report.ok else EXIT_DECODE


def cmd_verify(args) -> int:
    inst = LcbcInstance.load(args.instance)
    solved = solve_instance(inst)
    runs = []
    for t in range(args.trials):
        res = plan_instance(inst, seed=args.seed + t, mixing=args.mixing, solved=solved)
        runs.append({"seed": args.seed + t, **res.report.to_json()})
    ok = all(r["ok"] for r in runs)
    _emit({"ok": ok, "trials": args.trials, "runs": runs})
    return 0 if ok else EXIT_DECODE


def cmd_simulate(args) -> int:
    inst = LcbcInstance.load(args.instance)
    seeds = range(args.seed, args.seed + args.trials)
    summary = measure_rate_distribution(inst, args.trials, seeds, args.mixing, args.L, args.jobs)
    if args.transcript:
        res = plan_instance(inst, seed=args.seed, mixing=args.mixing)
        r = run(inst, res.plan, args.L, args.seed, transcript=True)
        Path(args.transcript).write_text(json.dumps(r.transcript) + "\n")
    _emit(summary)
    return 0 if summary["successes"] == summary["trials"] else EXIT_DECODE


def cmd_caching(args) -> int:
    grid = make_grid(args.grid) if args.points is None else [p for p in args.points.split(",")]
    text = sweep_csv(tradeoff_sweep(grid, args.jobs))
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_fixtures(args) -> int:
    out = Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    pkg = resources.files("lcbc") / "fixtures"
    for name in FIXTURES:
        (out / name).write_text((pkg / name).read_text())
        log.info("wrote %s", out / name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lcbc", description="Broadcast scheme synthesis for linear computation "
                "broadcast instances.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_instance(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("instance", help="instance JSON file")
        sp.set_defaults(fn=fn)
        return sp

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=None,
                        help="random seed (falls back to $LCBC_SEED, then 0)")
        sp.add_argument("--mixing", choices=("random", "canonical"), default="random",
                        help="first-attempt mixing coefficients")

    with_instance("decompose", cmd_decompose, "print the subspace decomposition")
    sp = with_instance("solve", cmd_solve, "solve the load LP exactly")
    sp.add_argument("--dump-lp", action="store_true", help="print the LP model instead")
    sp.add_argument("--subset-cap", type=int, default=None,
                    help="largest neighbour subset that gets its own constraint")
    sp = with_instance("build", cmd_build, "build and verify a broadcast plan")
    seeded(sp)
    sp = with_instance("verify", cmd_verify, "check decodability over several seeds")
    seeded(sp)
    sp.add_argument("--trials", type=int, default=1)
    sp = with_instance("simulate", cmd_simulate, "simulate broadcast and decoding")
    seeded(sp)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--L", type=int, default=None, help="data instances per trial")
    sp.add_argument("--transcript", help="write the first trial's transcript here")
    sp.add_argument("--jobs", type=int, default=1)
    sp = sub.add_parser("caching", help="memory-load tradeoff for three files and users")
    sp.add_argument("--grid", default="0.05", help="grid step in files (default 0.05)")
    sp.add_argument("--points", default=None, help="comma-separated M values, e.g. 0,1/3,1")
    sp.add_argument("--csv", help="write the CSV here instead of stdout")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(fn=cmd_caching)
    sp = sub.add_parser("fixtures", help="write the bundled example instances")
    sp.add_argument("--dir", default=".")
    sp.set_defaults(fn=cmd_fixtures)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        for attr in ("trials", "jobs"):
            if getattr(args, attr, 1) < 1:
                raise UsageError(f"--{attr} must be at least 1")
        return args.fn(args)
    except UsageError as e:
        print(f"lcbc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidInstance, FileNotFoundError, IsADirectoryError) as e:
        print(f"lcbc: invalid instance: {e}", file=sys.stderr)
        return EXIT_INVALID
    except LpInfeasible as e:
        print(f"lcbc: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CachingError, ValueError) as e:
        print(f"lcbc: error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
