"""Restarted primal-dual hybrid gradient for ``min c x, A x <= b, lb <= x <= ub``.

The solver streams snapshots of its running average at fixed iteration
checkpoints and can be resumed from any returned snapshot: the full
iterate state travels with it, so splitting a run at a checkpoint is
bit-identical to running straight through.

Dual values in snapshots follow the usual LP sign convention for a
minimization with ``<=`` rows (nonpositive), so the reduced costs are
``c - A^T y``. Internally the multipliers ``lam = -y >= 0`` are iterated.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .util import Deadline

DEFAULT_CHECKPOINTS = (100, 1_000, 10_000, 100_000)


@dataclass
class LinearProgram:
    """A bare LP in the same attribute layout as :class:`~mipfolio.model.ProblemInstance`."""

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]


@dataclass
class PdhgState:
    x: np.ndarray
    lam: np.ndarray
    x_sum: np.ndarray
    lam_sum: np.ndarray
    n_avg: int
    iteration: int
    eta: float
    tau: float
    norm: float

    def copy(self) -> "PdhgState":
        return replace(self, x=self.x.copy(), lam=self.lam.copy(), x_sum=self.x_sum.copy(),
                       lam_sum=self.lam_sum.copy())

    def average(self) -> tuple[np.ndarray, np.ndarray]:
        if self.n_avg == 0:
            return self.x.copy(), self.lam.copy()
        return self.x_sum / self.n_avg, self.lam_sum / self.n_avg


@dataclass(frozen=True)
class LpSnapshot:
    checkpoint_id: int | None
    iterations: int
    primal: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    primal_residual: float
    gap: float
    kkt: float
    objective: float
    timestamp: float
    status: str = "checkpoint"
    state: PdhgState | None = field(default=None, repr=False, compare=False)


def estimate_operator_norm(A, iters: int = 100, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral norm of ``A``."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    A = getattr(A, "A", A)
    m, n = A.shape
    if m == 0 or n == 0:
        return 0.0
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        sigma = math.sqrt(nw)
    return float(np.linalg.norm(A @ v)) if sigma > 0 else 0.0


def reduced_costs(problem, y) -> np.ndarray:
    """``c - A^T y``."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (problem.A.shape[0],):
        raise ValueError(f"duals have shape {y.shape}, expected ({problem.A.shape[0]},)")
    return problem.c - problem.A.T @ y


def kkt_error(problem, x, lam) -> tuple[float, float, float, float, float]:
    """Relative KKT error and its parts ``(kkt, primal_res, dual_res, gap, primal_obj)``."""
    c, A, b, lb, ub = problem.c, problem.A, problem.b, problem.lb, problem.ub
    pres = float(np.linalg.norm(np.maximum(A @ x - b, 0.0)))
    rc = c + A.T @ lam
    pos, neg = rc > 0, rc < 0
    lb_fin, ub_fin = np.isfinite(lb), np.isfinite(ub)
    dres = float(np.linalg.norm(np.where(pos & ~lb_fin, rc, 0.0) + np.where(neg & ~ub_fin, rc, 0.0)))
    dobj = float(-b @ lam + np.sum(np.where(pos & lb_fin, rc * np.where(lb_fin, lb, 0.0), 0.0))
                 + np.sum(np.where(neg & ub_fin, rc * np.where(ub_fin, ub, 0.0), 0.0)))
    pobj = float(c @ x)
    gap = abs(pobj - dobj)
    bn = float(np.abs(b).max()) if b.size else 0.0
    cn = float(np.abs(c).max()) if c.size else 0.0
    kkt = max(pres / (1.0 + bn), dres / (1.0 + cn), gap / (1.0 + abs(pobj) + abs(dobj)))
    return kkt, pres, dres, gap, pobj


def _snapshot(problem, state: PdhgState, checkpoint_id, status, use_average=True) -> LpSnapshot:
    if use_average:
        x, lam = state.average()
        # the mean of in-box points can leave the box by an ulp
        x = np.clip(x, problem.lb, problem.ub)
        lam = np.maximum(lam, 0.0)
    else:
        x, lam = state.x.copy(), state.lam.copy()
    kkt, pres, _dres, gap, pobj = kkt_error(problem, x, lam)
    duals = -lam
    return LpSnapshot(
        checkpoint_id=checkpoint_id, iterations=state.iteration, primal=x, duals=duals,
        reduced_costs=reduced_costs(problem, duals), primal_residual=pres, gap=gap, kkt=kkt,
        objective=pobj, timestamp=time.time(), status=status, state=state.copy(),
    )


def _diagnostic(problem, x, status) -> LpSnapshot:
    m = problem.A.shape[0]
    return LpSnapshot(
        checkpoint_id=None, iterations=0, primal=x, duals=np.zeros(m), reduced_costs=problem.c.copy(),
        primal_residual=math.inf, gap=math.inf, kkt=math.inf, objective=math.nan, timestamp=time.time(),
        status=status,
    )


def _box_minimizer(problem) -> np.ndarray:
    c, lb, ub = problem.c, problem.lb, problem.ub
    x = np.clip(np.zeros_like(c), lb, ub)
    x = np.where(c > 0, lb, x)
    x = np.where(c < 0, ub, x)
    return x


def pdhg_run(problem, checkpoints=DEFAULT_CHECKPOINTS, warm: LpSnapshot | None = None, deadline=None,
             sink=None, restart_period: int = 400, kkt_tol: float = 1e-8, iteration_limit: int | None = None,
             check_every: int = 64, step_scale: float = 0.9) -> LpSnapshot:
    """Run projected PDHG until the last checkpoint, the deadline, or convergence.

    At every iteration count listed in ``checkpoints`` a snapshot of the
    running average is passed to ``sink`` (if given); iteration continues from
    the last iterate. Every ``restart_period`` iterations the iterate restarts
    from whichever of the average and the current point has the smaller KKT
    error. ``iteration_limit`` pauses the run early without emitting; pass the
    returned snapshot as ``warm`` to continue.
    """
    checkpoints = [int(c) for c in checkpoints]
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    deadline = Deadline.coerce(deadline)
    c, A, b, lb, ub = problem.c, problem.A, problem.b, problem.lb, problem.ub
    At = A.T.tocsr()
    n, m = A.shape[1], A.shape[0]

    if np.any(lb > ub):
        snap = _diagnostic(problem, np.clip(np.zeros(n), lb, ub), "bounds-infeasible")
        if sink is not None:
            sink(snap)
        return snap

    if warm is not None and warm.state is not None and warm.state.x.shape == (n,) and warm.state.lam.shape == (m,):
        state = warm.state.copy()
    else:
        norm = estimate_operator_norm(A)
        step = step_scale / norm if norm > 0 else 0.0
        if warm is not None:
            x0 = np.clip(np.asarray(warm.primal, dtype=np.float64), lb, ub)
            lam0 = np.maximum(-np.asarray(warm.duals, dtype=np.float64), 0.0)
        else:
            x0 = np.clip(np.zeros(n), lb, ub)
            lam0 = np.zeros(m)
        state = PdhgState(x=x0, lam=lam0, x_sum=np.zeros(n), lam_sum=np.zeros(m), n_avg=0,
                          iteration=0, eta=step, tau=step, norm=norm)

    if state.norm == 0.0:
        x = _box_minimizer(problem)
        if not np.all(np.isfinite(x)):
            snap = _diagnostic(problem, np.clip(np.zeros(n), lb, ub), "unbounded")
        else:
            state.x = x
            state.n_avg = 0
            state.iteration = checkpoints[-1] if checkpoints else 0
            snap = _snapshot(problem, state, len(checkpoints) - 1 if checkpoints else None, "trivial")
        if sink is not None:
            sink(snap)
        return snap

    targets = {it: k for k, it in enumerate(checkpoints)}
    stop_at = checkpoints[-1] if checkpoints else state.iteration
    if iteration_limit is not None:
        stop_at = min(stop_at, iteration_limit)
    eta, tau = state.eta, state.tau
    x, lam = state.x, state.lam
    last: LpSnapshot | None = None

    while state.iteration < stop_at:
        if deadline.expired():
            return _snapshot(problem, state, None, "deadline")
        x_new = np.clip(x - eta * (c + At @ lam), lb, ub)
        lam_new = np.maximum(lam + tau * (A @ (2.0 * x_new - x) - b), 0.0)
        x, lam = x_new, lam_new
        state.x, state.lam = x, lam
        state.x_sum += x
        state.lam_sum += lam
        state.n_avg += 1
        state.iteration += 1
        it = state.iteration

        if it % check_every == 0 and not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam))):
            snap = _diagnostic(problem, np.clip(np.zeros(n), lb, ub), "nan")
            if sink is not None:
                sink(snap)
            return snap

        if it % restart_period == 0:
            xa, la = state.average()
            xa, la = np.clip(xa, lb, ub), np.maximum(la, 0.0)
            if kkt_error(problem, xa, la)[0] <= kkt_error(problem, x, lam)[0]:
                x, lam = xa, la
            state.x, state.lam = x, lam
            state.x_sum = np.zeros(n)
            state.lam_sum = np.zeros(m)
            state.n_avg = 0

        if it in targets:
            last = _snapshot(problem, state, targets[it], "checkpoint")
            if sink is not None:
                sink(last)

        if kkt_tol > 0 and it % check_every == 0:
            xa, la = state.average()
            ka = kkt_error(problem, xa, la)[0]
            kc = kkt_error(problem, x, lam)[0]
            if min(ka, kc) < kkt_tol:
                if kc < ka:
                    state.x_sum = np.zeros(n)
                    state.lam_sum = np.zeros(m)
                    state.n_avg = 0
                snap = _snapshot(problem, state, targets.get(it), "converged")
                if sink is not None and it not in targets:
                    sink(snap)
                return snap

    if last is not None and last.iterations == state.iteration:
        return last
    return _snapshot(problem, state, None, "limit")
