"""Weighted tabu search over flip and best-shift moves.

Every step scores all binary flips, the best shift of every general
integer and, every few iterations, the best shift of every continuous
column; the best admissible move with a positive score is applied. When no
such move exists the weights of violated rows are bumped and one variable
of a violated row is reset at random.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .bestshift import best_shifts_batch
from .model import FEAS_TOL, ProblemInstance, validate_solution
from .pool import cutoff_delta
from .scoring import AssignmentState, apply_move, flip_scores_batch, init_weights, update_weights
from .util import Deadline

logger = logging.getLogger(__name__)


@dataclass
class TabuConfig:
    tenure_base: int = 10
    tenure_frac: float = 0.05
    continuous_every: int = 10  # K
    partial_every: int = 500  # P
    poll_every: int = 2000  # Q
    restart_prob: float = 0.25  # rho
    layout: str = "row"
    int_window: float = 10.0  # range for random values of unbounded integers


@dataclass
class StepResult:
    kind: str  # "moved", "stuck" or "new_incumbent"
    j: int = -1
    value: float = math.nan
    score: float = 0.0
    aspiration: bool = False


def default_start(inst: ProblemInstance) -> np.ndarray:
    """The domain value closest to zero for every variable."""
    return np.clip(np.zeros(inst.n), inst.lb, inst.ub)


def round_start(inst: ProblemInstance, x) -> np.ndarray:
    """Clip into the bounds and round integers to nearest, replacing non-finite values."""
    x = np.asarray(x, dtype=np.float64).copy()
    x = np.where(np.isfinite(x), x, 0.0)
    x = np.clip(x, inst.lb, inst.ub)
    ints = inst.is_int
    x[ints] = np.clip(np.floor(x[ints] + 0.5), inst.lb[ints], inst.ub[ints])
    return x


class TabuInstanceState:
    """Everything one search trajectory owns: point, weights, tabu list, RNG."""

    def __init__(self, inst: ProblemInstance, x0, seed: int = 0, cutoff: float | None = None,
                 config: TabuConfig | None = None, feas_tol: float = FEAS_TOL):
        self.config = config or TabuConfig()
        self.state = AssignmentState(inst, round_start(inst, x0), feas_tol, cutoff)
        self.weights = init_weights(inst)
        self.expiry = np.zeros(inst.n, dtype=np.int64)
        self.iteration = 0
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.best_objective = math.inf
        self.stagnation = 0
        self.feas_tol = feas_tol

    def is_tabu(self, j: int) -> bool:
        return self.iteration < self.expiry[j]

    def restart(self, inst: ProblemInstance, x) -> None:
        self.state = AssignmentState(inst, round_start(inst, x), self.feas_tol, self.state.cutoff)
        self.expiry[:] = 0
        self.stagnation = 0

    def record_incumbent(self, objective: float) -> None:
        self.best_objective = objective
        self.tighten_cutoff(objective - cutoff_delta(objective))

    def tighten_cutoff(self, cutoff: float | None) -> None:
        if cutoff is None:
            return
        if self.state.cutoff is None or cutoff < self.state.cutoff:
            self.state.set_cutoff(cutoff)


def _feasible_after(inst, ts: TabuInstanceState, j: int, value: float) -> bool:
    st = ts.state
    d = value - st.x[j]
    rows, a = inst.column(j)
    r_new = st.r[rows] + a * d
    before = np.count_nonzero(st.r[rows] > st.tol[rows])
    after = np.count_nonzero(r_new > st.tol[rows])
    if st.violated - before + after != 0:
        return False
    if st.cutoff is None:
        return True
    return st.objective + inst.c[j] * d - st.cutoff <= 0.0


def score_candidates(inst: ProblemInstance, ts: TabuInstanceState):
    """Candidate moves ``(columns, values, scores)`` for the current iteration."""
    st, w = ts.state, ts.weights
    cols, vals, scores = [], [], []
    bins = inst.binaries
    if bins.size:
        cols.append(bins)
        vals.append(1.0 - st.x[bins])
        scores.append(flip_scores_batch(inst, st, w, bins, layout=ts.config.layout))
    shift = inst.general_ints
    if inst.continuous.size and ts.iteration % ts.config.continuous_every == 0:
        shift = np.concatenate((shift, inst.continuous))
    if shift.size:
        v, s = best_shifts_batch(inst, st, w, shift)
        cols.append(shift)
        vals.append(v)
        scores.append(s)
    if not cols:
        return np.zeros(0, np.int64), np.zeros(0), np.zeros(0)
    return np.concatenate(cols), np.concatenate(vals), np.concatenate(scores)


def tabu_step(ts: TabuInstanceState, inst: ProblemInstance) -> StepResult:
    """Apply the best admissible positive-score move, or report ``stuck``."""
    cols, vals, scores = score_candidates(inst, ts)
    live = (scores > 0.0) & (vals != ts.state.x[cols])
    if not live.any():
        return StepResult("stuck")
    tabu = ts.iteration < ts.expiry[cols]
    admissible = live & ~tabu
    aspire = np.zeros_like(live)
    for k in np.flatnonzero(live & tabu):
        j, v = int(cols[k]), float(vals[k])
        if _feasible_after(inst, ts, j, v) and ts.state.objective + inst.c[j] * (v - ts.state.x[j]) < ts.best_objective:
            aspire[k] = True
    admissible |= aspire
    if not admissible.any():
        return StepResult("stuck")
    best = scores[admissible].max()
    ties = np.flatnonzero(admissible & (scores == best))
    k = int(ties[ts.rng.integers(ties.size)]) if ties.size > 1 else int(ties[0])
    j, v = int(cols[k]), float(vals[k])

    apply_move(ts.state, inst, j, v)
    tenure = ts.config.tenure_base + math.ceil(ts.config.tenure_frac * cols.size)
    ts.expiry[j] = ts.iteration + tenure
    ts.iteration += 1
    kind = "moved"
    if ts.state.is_feasible():
        if validate_solution(inst, ts.state.x, ts.feas_tol):
            kind = "new_incumbent"
            ts.record_incumbent(ts.state.objective)
        else:  # residual drift; resync
            ts.state.recompute(inst)
    return StepResult(kind, j, v, float(best), bool(aspire[k]))


def _random_value(inst, ts, j, rng) -> float:
    lo, hi = inst.lb[j], inst.ub[j]
    x = ts.state.x[j]
    if inst.is_binary[j]:
        return 1.0 - x
    win = ts.config.int_window
    if not np.isfinite(lo):
        lo = x - win
    if not np.isfinite(hi):
        hi = x + win
    if inst.is_int[j]:
        return float(rng.integers(int(lo), int(hi) + 1))
    return float(rng.uniform(lo, hi))


def perturb(ts: TabuInstanceState, inst: ProblemInstance, rng=None) -> int:
    """Reset one variable of a random violated row (any row if none is violated).

    The cutoff row counts as a row. Binaries are flipped. Returns the column
    changed, or -1 when the instance has no variable to move.
    """
    rng = ts.rng if rng is None else rng
    st = ts.state
    has_cut = st.cutoff is not None and np.any(inst.c != 0.0)
    viol = np.flatnonzero(st.r > st.tol)
    pool = viol.tolist()
    if has_cut and st.r_cut > 0.0:
        pool.append(inst.m)
    if not pool:
        pool = list(range(inst.m)) + ([inst.m] if has_cut else [])
    if pool:
        i = pool[int(rng.integers(len(pool)))]
        cols = np.flatnonzero(inst.c) if i == inst.m else inst.row(i)[0]
    else:
        cols = np.arange(inst.n)
    if cols.size == 0:
        return -1
    j = int(cols[int(rng.integers(cols.size))])
    apply_move(st, inst, j, _random_value(inst, ts, j, rng))
    return j


@dataclass
class TabuStats:
    iterations: int = 0
    moves: int = 0
    stuck: int = 0
    incumbents: int = 0
    submissions: int = 0
    restarts: int = 0
    objectives: list[float] = field(default_factory=list)


class TabuWorker:
    """One trajectory wired to the pool; :meth:`run_slice` advances it a bounded number of steps."""

    def __init__(self, inst: ProblemInstance, seed: int = 0, start=None, pool=None, deadline=None,
                 config: TabuConfig | None = None, source: str | None = None, feas_tol: float = FEAS_TOL):
        self.inst = inst
        self.pool = pool
        self.deadline = Deadline.coerce(deadline)
        self.source = source or f"tabu-{seed}"
        self.config = config or TabuConfig()
        self.poll_rng = np.random.default_rng([seed, 1])
        if start is None:
            lp = pool.latest_lp() if pool is not None else None
            start = lp.primal if lp is not None else default_start(inst)
        cutoff = pool.cutoff() if pool is not None else None
        self.ts = TabuInstanceState(inst, start, seed, cutoff, self.config, feas_tol)
        self.stats = TabuStats()
        self._lp_seen = pool.lp_version if pool is not None else 0
        self._started = False

    def _submit_incumbent(self) -> None:
        self.stats.incumbents += 1
        self.stats.objectives.append(self.ts.state.objective)
        if self.pool is not None and not self.deadline.expired():
            self.pool.add_feasible(self.ts.state.x, self.source)
            self.stats.submissions += 1
            self.ts.tighten_cutoff(self.pool.cutoff())

    def _poll(self) -> None:
        pool, ts = self.pool, self.ts
        ts.tighten_cutoff(pool.cutoff())
        inc = pool.best_incumbent()
        fresh_lp = pool.lp_version > self._lp_seen
        better = inc is not None and inc[1] < ts.best_objective
        if not (better or fresh_lp):
            return
        if self.poll_rng.random() >= self.config.restart_prob:
            return
        if better:
            ts.restart(self.inst, inc[0])
            ts.best_objective = inc[1]
        else:
            ts.restart(self.inst, pool.latest_lp().primal)
        self._lp_seen = pool.lp_version
        self.stats.restarts += 1

    def run_slice(self, max_steps: int | None = None) -> bool:
        """Advance up to ``max_steps`` iterations; returns False once the deadline has passed."""
        if self.deadline.expired():
            return False
        ts, cfg, inst = self.ts, self.config, self.inst
        if not self._started:
            self._started = True
            if ts.state.is_feasible() and validate_solution(inst, ts.state.x, ts.feas_tol):
                ts.record_incumbent(ts.state.objective)
                self._submit_incumbent()
        steps = 0
        while max_steps is None or steps < max_steps:
            if self.deadline.expired():
                return False
            steps += 1
            self.stats.iterations += 1
            res = tabu_step(ts, inst)
            if res.kind == "stuck":
                self.stats.stuck += 1
                ts.stagnation += 1
                update_weights(ts.weights, ts.state, inst)
                perturb(ts, inst)
                ts.iteration += 1
            else:
                self.stats.moves += 1
                if res.kind == "new_incumbent":
                    ts.stagnation = 0
                    self._submit_incumbent()
            it = self.stats.iterations
            if self.pool is not None:
                if it % cfg.partial_every == 0 and not ts.state.is_feasible():
                    self.pool.add_partial(ts.state.x, self.source)
                    self.stats.submissions += 1
                if it % cfg.poll_every == 0:
                    self._poll()
        return True


def run_instance(inst: ProblemInstance, seed: int = 0, start=None, pool=None, deadline=None,
                 config: TabuConfig | None = None, max_iters: int | None = None) -> TabuStats:
    """Run one trajectory until the deadline (or ``max_iters`` steps)."""
    worker = TabuWorker(inst, seed, start, pool, deadline, config)
    if max_iters is None and Deadline.coerce(worker.deadline).end == math.inf:
        raise ValueError("run_instance needs a deadline or max_iters")
    worker.run_slice(max_iters)
    return worker.stats
