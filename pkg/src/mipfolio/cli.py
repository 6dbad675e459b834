"""Command-line entry point: ``solve``, ``eval`` and ``sgm``.

Every option can also be given through an environment variable named
``MIPFOLIO_`` followed by the option name in upper case with dashes turned
into underscores (``MIPFOLIO_TIME_LIMIT=60``). Command-line values win.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .metrics import IncumbentTrace, primal_gap, primal_integral, shifted_geomean
from .model import InfeasibleModelError, MpsParseError
from .orchestrator import EXIT_ERROR, EXIT_NONE, SolveConfig, solve

ENV_PREFIX = "MIPFOLIO_"
_TRUE = {"1", "true", "yes", "on"}


def _env(flag: str):
    return os.environ.get(ENV_PREFIX + flag.lstrip("-").upper().replace("-", "_"))


def _add(parser, flag, **kw):
    env = _env(flag)
    if env is not None:
        if kw.get("action") == "store_true":
            kw["default"] = env.strip().lower() in _TRUE
        else:
            kw["default"] = env
            kw.pop("required", None)
    parser.add_argument(flag, **kw)


def _checkpoints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad checkpoint list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mipfolio", description="Portfolio primal heuristic for MIPs in MPS format.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="search for good feasible solutions")
    s.add_argument("mps", help="instance file (.mps or .mps.gz, '-' for stdin)")
    _add(s, "--time-limit", type=float, default=300.0, help="wall-clock seconds (default 300)")
    _add(s, "--threads", type=int, default=None, help="worker threads (default: CPU count)")
    _add(s, "--tabu-instances", type=int, default=None, help="tabu trajectories (default: threads - 3)")
    _add(s, "--seed", type=int, default=0)
    _add(s, "--checkpoints", type=_checkpoints, default=(100, 1000, 10000, 100000),
         help="comma-separated PDHG snapshot iterations")
    _add(s, "--sol-out", default=None, help="write the best solution here")
    _add(s, "--trace-out", default=None, help="write the incumbent trace (ndjson) here")
    _add(s, "--deterministic", action="store_true", help="round-robin on one thread with a logical clock")
    _add(s, "--max-rounds", type=int, default=None, help="round limit in deterministic mode")
    _add(s, "--column-wise-flips", action="store_true", help="score flips in column order")

    e = sub.add_parser("eval", help="primal gap and primal integral of a stored trace")
    _add(e, "--trace", required=True)
    _add(e, "--ref", type=float, required=True, help="reference objective")
    _add(e, "--horizon", type=float, default=300.0, help="seconds")

    g = sub.add_parser("sgm", help="shifted geometric mean")
    _add(g, "--shift", type=float, default=1.0)
    g.add_argument("values", type=float, nargs="+")
    return p


def _solve(args) -> int:
    checkpoints = args.checkpoints
    if isinstance(checkpoints, str):
        checkpoints = _checkpoints(checkpoints)
    cfg = SolveConfig(
        instance=args.mps, time_limit=float(args.time_limit),
        threads=None if args.threads is None else int(args.threads),
        tabu_instances=None if args.tabu_instances is None else int(args.tabu_instances),
        seed=int(args.seed), checkpoints=checkpoints, sol_out=args.sol_out, trace_out=args.trace_out,
        deterministic=args.deterministic, column_wise_flips=args.column_wise_flips,
        max_rounds=None if args.max_rounds is None else int(args.max_rounds),
    )
    try:
        rep = solve(cfg)
    except (MpsParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except InfeasibleModelError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_NONE
    print(f"status {rep.status}")
    if rep.objective is not None:
        print(f"objective {rep.objective:.12g}")
    elif rep.best_partial_violation is not None:
        print(f"best partial violation {rep.best_partial_violation:.6g}")
    print(f"elapsed {rep.elapsed:.3f}")
    for name, st in rep.workers.items():
        print(f"worker {name} iterations={st.iterations} submissions={st.submissions} wins={st.wins}")
    if rep.message:
        print(f"worker errors: {rep.message}", file=sys.stderr)
    return rep.exit_code


def _eval(args) -> int:
    trace = IncumbentTrace.read(args.trace)
    ref, horizon = float(args.ref), float(args.horizon)
    last = None
    for rec in trace:
        if rec.elapsed_seconds <= horizon:
            last = rec.objective
    print(f"gap {primal_gap(last, ref)!r}")
    print(f"primal_integral {primal_integral(trace, ref, horizon)!r}")
    return 0


def _sgm(args) -> int:
    print(repr(shifted_geomean(args.values, float(args.shift))))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            return _solve(args)
        if args.command == "eval":
            return _eval(args)
        return _sgm(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
