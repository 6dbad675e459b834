"""Fix-and-propagate with bounded repair and LP completion of continuous variables."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .lp import LinearProgram, pdhg_run
from .model import FEAS_TOL, ProblemInstance, validate_solution, violation
from .propagate import DomainBox, propagate
from .util import Deadline

logger = logging.getLogger(__name__)

DEFAULT_CONFLICT_BUDGET = 20
COMPLETION_CHECKPOINTS = (1_000, 10_000)


def round_half_up(v):
    return np.floor(np.asarray(v, dtype=np.float64) + 0.5)


def fixing_order(inst: ProblemInstance, guide, rc=None, box: DomainBox | None = None) -> list[tuple[int, float]]:
    """Integer variables ordered most-decided first, each with its rounded target value.

    Sort key: distance of the guide to the nearest integer, then larger
    ``|rc_j|`` first when reduced costs are given, then column index.
    Targets are rounded half up and clipped into the domain.
    """
    guide = np.asarray(guide, dtype=np.float64)
    if guide.shape != (inst.n,):
        raise ValueError(f"guide has shape {guide.shape}, expected ({inst.n},)")
    lb = inst.lb if box is None else box.lb
    ub = inst.ub if box is None else box.ub
    ints = np.flatnonzero(inst.is_int)
    g = guide[ints]
    dist = np.abs(g - np.round(g))
    mag = np.zeros(ints.size) if rc is None else -np.abs(np.asarray(rc, dtype=np.float64)[ints])
    order = np.lexsort((ints, mag, dist))
    target = np.clip(round_half_up(g), lb[ints], ub[ints])
    return [(int(ints[k]), float(target[k])) for k in order]


@dataclass
class Completion:
    feasible: bool
    x: np.ndarray


@dataclass
class FprResult:
    status: str  # "feasible", "partial" or "abort"
    x: np.ndarray | None
    violation: float = 0.0
    objective: float | None = None
    conflicts: int = 0
    backtracks: int = 0
    applied: list[tuple[int, float, float, float]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def complete_continuous(inst: ProblemInstance, x_fixed, deadline=None, box: DomainBox | None = None,
                        checkpoints=COMPLETION_CHECKPOINTS, feas_tol: float = FEAS_TOL) -> Completion:
    """Assign continuous variables by solving the LP left after fixing every integer.

    The LP is solved approximately by PDHG; the verdict comes from
    :func:`validate_solution` at ``feas_tol``.
    """
    x = np.array(x_fixed, dtype=np.float64)
    ints = np.flatnonzero(inst.is_int)
    cont = inst.continuous
    x[ints] = np.round(x[ints])
    if cont.size == 0:
        return Completion(bool(validate_solution(inst, x, feas_tol)), x)

    lb = (inst.lb if box is None else box.lb).copy()
    ub = (inst.ub if box is None else box.ub).copy()
    lb[ints] = ub[ints] = x[ints]
    fixed_box = DomainBox(lb, ub, inst.is_int)
    prop = propagate(inst, fixed_box, feas_tol)
    if prop.conflict:
        x[cont] = np.clip(x[cont], lb[cont], ub[cont])
        return Completion(False, x)
    lb, ub = prop.box.lb, prop.box.ub

    A_int = inst.A[:, ints]
    A_cont = inst.A[:, cont].tocsr()
    b_red = inst.b - A_int @ x[ints]
    live = np.diff(A_cont.indptr) > 0
    if np.any(b_red[~live] < -inst.row_tol(feas_tol)[~live]):
        x[cont] = np.clip(np.zeros(cont.size), lb[cont], ub[cont])
        return Completion(False, x)
    sub = LinearProgram(c=inst.c[cont].copy(), A=A_cont[live], b=b_red[live],
                        lb=lb[cont].copy(), ub=ub[cont].copy())
    snap = pdhg_run(sub, checkpoints=checkpoints, deadline=deadline, kkt_tol=1e-9)
    x[cont] = np.clip(snap.primal, sub.lb, sub.ub)
    return Completion(bool(validate_solution(inst, x, feas_tol)), x)


def _alternative(j, v, box, guide):
    """Nearest other domain value of integer ``j``, toward the guide first."""
    up, down = v + 1.0, v - 1.0
    prefer_up = guide is None or guide[j] >= v
    first, second = (up, down) if prefer_up else (down, up)
    for cand in (first, second):
        if box.lb[j] <= cand <= box.ub[j]:
            return cand
    return None


def _partial_point(inst, box, guide):
    x = np.clip(guide, box.lb, box.ub)
    ints = inst.is_int
    x[ints] = np.clip(round_half_up(guide[ints]), box.lb[ints], box.ub[ints])
    x = np.where(np.isfinite(x), x, 0.0)
    return x


def fpr_dive(inst: ProblemInstance, order, pool=None, conflict_budget: int = DEFAULT_CONFLICT_BUDGET,
             guide=None, deadline=None, source: str = "fpr", feas_tol: float = FEAS_TOL) -> FprResult:
    """Fix integers in ``order``, propagating after each fixing, with bounded repair.

    On a conflict the failed fixing is retried once with the nearest other
    domain value; if that fails too, the most recent committed fixing that
    still has its alternative is undone and retried with it. Every conflict
    consumes one unit of ``conflict_budget``; running out returns the current
    partial point with its total row violation. A complete fixing is handed to
    :func:`complete_continuous`. Results go to ``pool`` when one is given.
    """
    deadline = Deadline.coerce(deadline)
    order = list(order)
    if guide is None:
        guide = np.clip(np.zeros(inst.n), inst.lb, inst.ub)
        for j, v in order:
            guide[j] = v
    guide = np.asarray(guide, dtype=np.float64)

    root = propagate(inst, DomainBox.from_instance(inst), feas_tol)
    if root.conflict:
        if not order:
            return FprResult("abort", None)
        return _finish_partial(inst, DomainBox.from_instance(inst), guide, pool, source, 0, 0, [])

    box = root.box
    stack: list[tuple[int, int, float, DomainBox, bool]] = []  # (pos, j, value, box_before, alt_used)
    conflicts = backtracks = 0
    applied: list[tuple[int, float, float, float]] = []
    pos = 0

    def attempt(b: DomainBox, j: int, v: float):
        trial = b.copy()
        trial.fix(j, v)
        return propagate(inst, trial, feas_tol)

    while pos < len(order):
        if deadline.expired():
            return _finish_partial(inst, box, guide, pool, source, conflicts, backtracks, applied)
        j, target = order[pos]
        if box.lb[j] == box.ub[j]:
            pos += 1
            continue
        v = float(np.clip(target, box.lb[j], box.ub[j]))
        res = attempt(box, j, v)
        if not res.conflict:
            applied.append((j, v, float(box.lb[j]), float(box.ub[j])))
            stack.append((pos, j, v, box, False))
            box = res.box
            pos += 1
            continue

        # repair: current variable first, then earlier levels, one alternative each
        candidate = (pos, j, v, box)
        while True:
            conflicts += 1
            if conflicts > conflict_budget:
                return _finish_partial(inst, box, guide, pool, source, conflicts, backtracks, applied)
            alt = None
            while alt is None:
                if candidate is None:
                    while stack and stack[-1][4]:
                        stack.pop()
                        applied.pop()
                    if not stack:
                        return _finish_partial(inst, box, guide, pool, source, conflicts, backtracks, applied)
                    lvl_pos, lj, lv, lbox, _ = stack.pop()
                    applied.pop()
                else:
                    lvl_pos, lj, lv, lbox = candidate
                    candidate = None
                box = lbox
                alt = _alternative(lj, lv, lbox, guide)
            backtracks += 1
            res = attempt(lbox, lj, alt)
            if not res.conflict:
                applied.append((lj, alt, float(lbox.lb[lj]), float(lbox.ub[lj])))
                stack.append((lvl_pos, lj, alt, lbox, True))
                box = res.box
                pos = lvl_pos + 1
                break

    x = _partial_point(inst, box, guide)
    done = complete_continuous(inst, x, deadline=deadline, box=box, feas_tol=feas_tol)
    if done.feasible:
        result = FprResult("feasible", done.x, 0.0, inst.objective(done.x), conflicts, backtracks, applied)
        if pool is not None:
            pool.add_feasible(done.x, source)
        return result
    viol = violation(inst, done.x)
    if pool is not None:
        pool.add_partial(done.x, source, viol)
    return FprResult("partial", done.x, viol, inst.objective(done.x), conflicts, backtracks, applied)


def _finish_partial(inst, box, guide, pool, source, conflicts, backtracks, applied) -> FprResult:
    x = _partial_point(inst, box, guide)
    viol = violation(inst, x)
    if pool is not None:
        pool.add_partial(x, source, viol)
    return FprResult("partial", x, viol, inst.objective(x), conflicts, backtracks, applied)
