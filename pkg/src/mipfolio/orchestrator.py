"""Portfolio driver: one LP worker, several tabu trajectories, FPR and the feasibility pump.

Workers are objects with a ``step()`` method doing one bounded unit of work
and returning whether anything was done. The threaded mode gives every
worker its own thread; the deterministic mode calls them round-robin on the
calling thread and stamps the trace with a logical clock, so two runs with
the same seed produce identical traces.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .feaspump import REPAIR_ITERS, pump, repair_partial
from .fpr import DEFAULT_CONFLICT_BUDGET, fixing_order, fpr_dive
from .lp import DEFAULT_CHECKPOINTS, pdhg_run
from .metrics import IncumbentTrace
from .model import ProblemInstance, load, write_sol
from .pool import SolutionPool
from .tabu import TabuConfig, TabuWorker
from .util import Deadline

logger = logging.getLogger(__name__)

EXIT_FOUND, EXIT_ERROR, EXIT_NONE = 0, 1, 2
RESERVED_WORKERS = 3
LP_SLICE = 100
TABU_SLICE = 50
LOGICAL_TICK = 1e-3


@dataclass
class SolveConfig:
    instance: str | Path | ProblemInstance
    time_limit: float = 300.0
    threads: int | None = None
    tabu_instances: int | None = None
    seed: int = 0
    checkpoints: tuple[int, ...] = DEFAULT_CHECKPOINTS
    sol_out: str | Path | None = None
    trace_out: str | Path | None = None
    deterministic: bool = False
    column_wise_flips: bool = False
    max_rounds: int | None = None
    objective_target: float | None = None
    conflict_budget: int = DEFAULT_CONFLICT_BUDGET
    pump_iters: int = 100
    repair_iters: int = REPAIR_ITERS


@dataclass
class WorkerStats:
    iterations: int = 0
    submissions: int = 0
    wins: int = 0


@dataclass
class SolveReport:
    status: str
    exit_code: int
    objective: float | None = None
    x: np.ndarray | None = None
    trace: IncumbentTrace = field(default_factory=IncumbentTrace)
    workers: dict[str, WorkerStats] = field(default_factory=dict)
    best_partial_violation: float | None = None
    elapsed: float = 0.0
    message: str = ""


# ---------------------------------------------------------------------------
# Workers
# ---------------------------------------------------------------------------


class LpWorker:
    name = "lp"

    def __init__(self, inst, pool, deadline, checkpoints):
        self.inst, self.pool, self.deadline = inst, pool, deadline
        self.checkpoints = tuple(checkpoints)
        self.snap = None
        self.done = not self.checkpoints
        self.stats = WorkerStats()

    def _sink(self, snap):
        if self.pool.add_lp(snap, self.name):
            self.stats.submissions += 1

    def step(self) -> bool:
        if self.done or self.deadline.expired():
            return False
        it0 = self.snap.iterations if self.snap is not None else 0
        self.snap = pdhg_run(self.inst, self.checkpoints, warm=self.snap, deadline=self.deadline, sink=self._sink,
                             iteration_limit=it0 + LP_SLICE)
        self.stats.iterations = self.snap.iterations
        if self.snap.status not in ("limit", "checkpoint", "deadline") or self.snap.iterations >= self.checkpoints[-1]:
            self.done = True
        return True


class FprWorker:
    name = "fpr"

    def __init__(self, inst, pool, deadline, conflict_budget):
        self.inst, self.pool, self.deadline = inst, pool, deadline
        self.budget = conflict_budget
        self.lp_seen = 0
        self.stats = WorkerStats()

    def _target(self) -> ProblemInstance:
        cut = self.pool.cutoff()
        return self.inst if cut is None else self.inst.with_cutoff(cut)

    def step(self) -> bool:
        if self.deadline.expired():
            return False
        pool = self.pool
        if pool.lp_version > self.lp_seen:
            self.lp_seen = pool.lp_version
            snap = pool.latest_lp()
            guide, rc = snap.primal, snap.reduced_costs
        else:
            entry = pool.take_partial()
            if entry is None:
                return False
            guide, rc = entry.point, None
        target = self._target()
        guide = np.clip(np.where(np.isfinite(guide), guide, 0.0), target.lb, target.ub)
        order = fixing_order(target, guide, rc)
        fpr_dive(target, order, pool=pool, conflict_budget=self.budget, guide=guide,
                 deadline=self.deadline, source=self.name)
        self.stats.iterations += 1
        self.stats.submissions += 1
        return True


class PumpWorker:
    name = "feaspump"

    def __init__(self, inst, pool, deadline, seed, pump_iters, repair_iters):
        self.inst, self.pool, self.deadline = inst, pool, deadline
        self.rng = np.random.default_rng([seed, 7])
        self.pump_iters, self.repair_iters = pump_iters, repair_iters
        self.lp_seen = 0
        self.stats = WorkerStats()

    def step(self) -> bool:
        if self.deadline.expired():
            return False
        pool = self.pool
        seed = int(self.rng.integers(2**31))
        if pool.lp_version > self.lp_seen:
            self.lp_seen = pool.lp_version
            res = pump(self.inst, pool.latest_lp(), pool, self.pump_iters, self.deadline, seed, source=self.name)
        else:
            entry = pool.take_partial()
            if entry is None:
                return False
            res = repair_partial(self.inst, entry.point, pool, self.repair_iters, self.deadline, seed,
                                 source=self.name)
        self.stats.iterations += max(res.iterations, 1)
        self.stats.submissions += 1
        return True


class TabuAdapter:
    def __init__(self, worker: TabuWorker):
        self.worker = worker
        self.name = worker.source
        self.stats = WorkerStats()

    def step(self) -> bool:
        alive = self.worker.run_slice(TABU_SLICE)
        self.stats.iterations = self.worker.stats.iterations
        self.stats.submissions = self.worker.stats.submissions
        return alive


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def _target_reached(pool, inst, target) -> bool:
    if target is None:
        return False
    inc = pool.best_incumbent()
    if inc is None:
        return False
    z = inst.to_user(inc[1])
    return abs(z - target) <= 1e-9 * max(1.0, abs(target)) or inst.sense * (z - target) < 0


def _run_threaded(workers, deadline, pool, inst, target):
    errors = []

    def loop(w):
        try:
            while not deadline.expired():
                if _target_reached(pool, inst, target):
                    deadline.stop()
                    break
                if not w.step():
                    time.sleep(0.001)
        except Exception as exc:  # a failing worker must not take the portfolio down
            logger.exception("worker %s failed", w.name)
            errors.append((w.name, exc))

    threads = [threading.Thread(target=loop, args=(w,), name=w.name, daemon=True) for w in workers]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return errors


def _run_round_robin(workers, deadline, pool, inst, target, max_rounds):
    rounds = 0
    while not deadline.expired() and (max_rounds is None or rounds < max_rounds):
        rounds += 1
        for w in workers:
            w.step()
            if _target_reached(pool, inst, target):
                return
    return


def solve(config: SolveConfig) -> SolveReport:
    """Run the portfolio under ``config.time_limit`` and write the requested outputs."""
    t0 = time.monotonic()
    inst = config.instance if isinstance(config.instance, ProblemInstance) else load(config.instance)
    deadline = Deadline(config.time_limit)

    ticks = [0]
    clock = (lambda: ticks[0] * LOGICAL_TICK) if config.deterministic else None
    pool = SolutionPool(inst, clock=clock)

    threads = config.threads or os.cpu_count() or 1
    n_tabu = config.tabu_instances
    if n_tabu is None:
        n_tabu = 1 if config.deterministic else max(1, threads - RESERVED_WORKERS)
    tcfg = TabuConfig(layout="col" if config.column_wise_flips else "row")

    workers = [LpWorker(inst, pool, deadline, config.checkpoints)]
    workers += [TabuAdapter(TabuWorker(inst, config.seed + k, None, pool, deadline, tcfg, f"tabu-{k}"))
                for k in range(n_tabu)]
    workers.append(FprWorker(inst, pool, deadline, config.conflict_budget))
    workers.append(PumpWorker(inst, pool, deadline, config.seed, config.pump_iters, config.repair_iters))

    if config.deterministic:
        for w in workers:
            w.step = _ticking(w.step, ticks)

    errors = []
    if config.time_limit > 0:
        if config.deterministic:
            _run_round_robin(workers, deadline, pool, inst, config.objective_target, config.max_rounds)
        else:
            errors = _run_threaded(workers, deadline, pool, inst, config.objective_target)
    deadline.stop()
    pool.close()

    stats = {w.name: w.stats for w in workers}
    for name, wins in pool.wins.items():
        stats.setdefault(name, WorkerStats()).wins = wins

    inc = pool.best_incumbent()
    part = pool.best_partial()
    report = SolveReport(
        status="feasible" if inc is not None else "none",
        exit_code=EXIT_FOUND if inc is not None else EXIT_NONE,
        trace=pool.trace, workers=stats,
        best_partial_violation=part.violation if part is not None else None,
        elapsed=time.monotonic() - t0,
        message="; ".join(f"{n}: {e!r}" for n, e in errors),
    )
    if inc is not None:
        report.x = inc[0]
        report.objective = inst.user_objective(inc[0])
        if config.sol_out is not None:
            write_sol(config.sol_out, inst, inc[0])
    if config.trace_out is not None:
        pool.trace.write(config.trace_out)
    return report


def _ticking(step, ticks):
    def wrapped():
        ticks[0] += 1
        return step()
    return wrapped
