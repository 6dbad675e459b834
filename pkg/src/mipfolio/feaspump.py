"""Objective feasibility pump with fix-and-propagate rounding.

Each iteration rounds the current LP point with a single FPR dive (conflict
budget 1), then projects back onto the LP relaxation by minimizing a blend
of the L1 distance to the rounded point and the objective. The blend
weight on the objective decays geometrically.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fpr import fixing_order, fpr_dive, round_half_up
from .lp import LinearProgram, pdhg_run
from .model import FEAS_TOL, ProblemInstance, validate_solution, violation
from .util import Deadline

logger = logging.getLogger(__name__)

ALPHA_DECAY = 0.9
CYCLE_WINDOW = 30
PROJECTION_ITERS = 1_000
REPAIR_ITERS = 10


@dataclass
class PumpResult:
    status: str  # "feasible" or "partial"
    x: np.ndarray
    violation: float
    objective: float
    iterations: int = 0
    projections: int = 0
    alphas: list[float] = field(default_factory=list)
    cycles: int = 0
    rounded_violations: list[float] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def distance_lp(inst: ProblemInstance, x_round, alpha: float, cutoff: float | None = None) -> tuple[LinearProgram, np.ndarray]:
    """Projection LP around the rounded point ``x_round``.

    Integers sitting at a bound enter the distance linearly; the others get
    two nonnegative slack columns ``p, q`` with ``x - p <= x~`` and
    ``-x - q <= -x~`` so that ``p + q >= |x - x~|``. Returns the LP and the
    distance coefficients (over ``x, p, q``) before normalization.
    """
    n = inst.n
    xr = np.asarray(x_round, dtype=np.float64)
    ints = inst.is_int
    at_lb = ints & (xr <= inst.lb)
    at_ub = ints & (xr >= inst.ub) & ~at_lb
    inner = np.flatnonzero(ints & ~at_lb & ~at_ub)
    g = inner.size

    d = np.zeros(n + 2 * g)
    d[:n][at_lb] = 1.0
    d[:n][at_ub] = -1.0
    d[n:] = 1.0
    dn = max(1.0, float(np.linalg.norm(d)))
    c = np.concatenate([inst.c, np.zeros(2 * g)])
    cn = max(1.0, float(np.linalg.norm(inst.c)))
    obj = (1.0 - alpha) * d / dn + alpha * c / cn

    blocks = [sp.hstack([inst.A, sp.csr_matrix((inst.m, 2 * g))])]
    rhs = [inst.b]
    if g:
        E = sp.csr_matrix((np.ones(g), (np.arange(g), inner)), shape=(g, n))
        I = sp.identity(g, format="csr")
        Z = sp.csr_matrix((g, g))
        blocks.append(sp.hstack([E, -I, Z]))
        blocks.append(sp.hstack([-E, Z, -I]))
        rhs += [xr[inner], -xr[inner]]
    if cutoff is not None:
        blocks.append(sp.csr_matrix(c.reshape(1, -1)))
        rhs.append(np.array([cutoff]))
    A = sp.vstack(blocks, format="csr")
    lb = np.concatenate([inst.lb, np.zeros(2 * g)])
    ub = np.concatenate([inst.ub, np.full(2 * g, np.inf)])
    return LinearProgram(c=obj, A=A, b=np.concatenate(rhs), lb=lb, ub=ub), d


def _int_key(inst, x) -> bytes:
    return np.round(x[inst.is_int]).tobytes()


def _flip_fractional(inst, x_round, x_lp, rng) -> np.ndarray:
    """Flip the ``T`` binaries whose LP values are farthest from the rounding."""
    bins = inst.binaries
    if bins.size == 0:
        return x_round
    dist = np.abs(x_lp[bins] - x_round[bins])
    frac = np.abs(x_lp[bins] - np.round(x_lp[bins])) > 1e-6
    n_frac = int(np.count_nonzero(frac)) or bins.size
    T = int(rng.integers(-(-n_frac // 2), n_frac + 1))
    order = np.lexsort((bins, -dist))[:T]
    out = x_round.copy()
    j = bins[order]
    out[j] = 1.0 - out[j]
    return out


def pump(inst: ProblemInstance, snapshot=None, pool=None, max_iters: int = 100, deadline=None, seed: int = 0,
         alpha0: float = 1.0, start=None, use_cutoff: bool = True, source: str = "feaspump",
         feas_tol: float = FEAS_TOL) -> PumpResult:
    """Pump from an LP point (``snapshot.primal``) or, with ``start``, from a given rounded point.

    Returns the first feasible point found, or else the least-violated
    rounded point; either way the result is pushed to ``pool`` when given.
    """
    deadline = Deadline.coerce(deadline)
    rng = np.random.default_rng(seed)
    n = inst.n
    if start is not None:
        x_lp = np.asarray(start, dtype=np.float64).copy()
    elif snapshot is not None:
        x_lp = np.clip(np.asarray(snapshot.primal, dtype=np.float64), inst.lb, inst.ub)
    else:
        x_lp = np.clip(np.zeros(n), inst.lb, inst.ub)
    rc = getattr(snapshot, "reduced_costs", None) if start is None else None

    best_x, best_v = None, np.inf
    alphas: list[float] = []
    rounded_v: list[float] = []
    history: deque[bytes] = deque(maxlen=CYCLE_WINDOW)
    projections = cycles = 0
    it = 0

    def finish(status, x, v):
        if pool is not None:
            if status == "feasible":
                pool.add_feasible(x, source)
            else:
                pool.add_partial(x, source, v)
        return PumpResult(status, x, v, inst.objective(x), it, projections, alphas, cycles, rounded_v)

    def consider(x):
        nonlocal best_x, best_v
        v = violation(inst, x)
        rounded_v.append(v)
        if v < best_v:
            best_x, best_v = x.copy(), v
        return v

    while it < max_iters and not deadline.expired():
        it += 1
        if start is not None and it == 1:
            x_round = x_lp.copy()
            ints = inst.is_int
            x_round[ints] = np.clip(round_half_up(x_round[ints]), inst.lb[ints], inst.ub[ints])
            if validate_solution(inst, x_round, feas_tol):
                consider(x_round)
                return finish("feasible", x_round, 0.0)
        else:
            order = fixing_order(inst, x_lp, rc if it == 1 else None)
            res = fpr_dive(inst, order, pool=None, conflict_budget=1, guide=x_lp, deadline=deadline,
                           feas_tol=feas_tol)
            if res.x is None:
                break
            x_round = res.x
            if res.feasible:
                consider(x_round)
                return finish("feasible", x_round, 0.0)
        consider(x_round)

        key = _int_key(inst, x_round)
        if key in history:
            cycles += 1
            x_round = _flip_fractional(inst, x_round, x_lp, rng)
            consider(x_round)
            if validate_solution(inst, x_round, feas_tol):
                return finish("feasible", x_round, 0.0)
            key = _int_key(inst, x_round)
        history.append(key)

        if deadline.expired():
            break
        alpha = alpha0 * ALPHA_DECAY ** (it - 1)
        alphas.append(alpha)
        cutoff = pool.cutoff() if (use_cutoff and pool is not None) else None
        lp, _ = distance_lp(inst, x_round, alpha, cutoff)
        snap = pdhg_run(lp, checkpoints=(PROJECTION_ITERS,), deadline=deadline)
        projections += 1
        if snap.status in ("bounds-infeasible", "unbounded", "nan"):
            break
        x_lp = np.clip(snap.primal[:n], inst.lb, inst.ub)

    if best_x is None:
        x = x_lp.copy()
        ints = inst.is_int
        x[ints] = np.clip(round_half_up(x[ints]), inst.lb[ints], inst.ub[ints])
        x = np.where(np.isfinite(x), x, 0.0)
        consider(x)
    return finish("partial", best_x, best_v)


def repair_partial(inst: ProblemInstance, partial, pool=None, iter_cap: int = REPAIR_ITERS, deadline=None,
                   seed: int = 0, source: str = "feaspump-repair", feas_tol: float = FEAS_TOL) -> PumpResult:
    """A few pump iterations started from an infeasible point."""
    x = np.array(partial, dtype=np.float64)
    if iter_cap <= 0:
        return PumpResult("partial", x, violation(inst, x), inst.objective(x))
    if validate_solution(inst, x, feas_tol):
        if pool is not None:
            pool.add_feasible(x, source)
        return PumpResult("feasible", x, 0.0, inst.objective(x))
    return pump(inst, None, pool, max_iters=iter_cap, deadline=deadline, seed=seed, start=x, source=source,
                feas_tol=feas_tol)
