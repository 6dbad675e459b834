"""Activity-based bound propagation over ``<=`` rows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import FEAS_TOL, INT_TOL, ProblemInstance

MAX_ROUNDS = 50
CHANGE_TOL = 1e-9


@dataclass
class DomainBox:
    lb: np.ndarray
    ub: np.ndarray
    is_int: np.ndarray

    @classmethod
    def from_instance(cls, inst: ProblemInstance) -> "DomainBox":
        return cls(inst.lb.astype(np.float64).copy(), inst.ub.astype(np.float64).copy(), inst.is_int.copy())

    def copy(self) -> "DomainBox":
        return DomainBox(self.lb.copy(), self.ub.copy(), self.is_int)

    def fix(self, j: int, value: float) -> None:
        self.lb[j] = self.ub[j] = value

    @property
    def conflicting(self) -> bool:
        return bool(np.any(self.lb > self.ub))

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lb - tol) and np.all(x <= self.ub + tol))

    def subset_of(self, other: "DomainBox") -> bool:
        return bool(np.all(self.lb >= other.lb) and np.all(self.ub <= other.ub))


@dataclass
class Propagation:
    box: DomainBox
    conflict_row: int | None = None
    rounds: int = 0

    @property
    def conflict(self) -> bool:
        return self.conflict_row is not None


def _min_activity(inst, lb, ub):
    A = inst.A
    j, a, i = A.indices, A.data, inst.row_of_nnz
    bnd = np.where(a > 0, lb[j], ub[j])
    inf = ~np.isfinite(bnd)
    contrib = np.where(inf, 0.0, a * np.where(inf, 0.0, bnd))
    lfin = np.bincount(i, weights=contrib, minlength=inst.m)
    ninf = np.bincount(i, weights=inf.astype(np.float64), minlength=inst.m)
    return contrib, inf, lfin, ninf


def propagate(inst: ProblemInstance, box: DomainBox, feas_tol: float = FEAS_TOL,
              max_rounds: int = MAX_ROUNDS) -> Propagation:
    """Tighten ``box`` to a fixpoint of the minimal-activity rule, or report a conflicting row.

    A row whose minimal activity exceeds its rhs (beyond tolerance) is a
    conflict. Otherwise each variable's bound is tightened by the slack left
    after every other variable sits at its activity-minimizing bound; integer
    bounds are rounded inward. Rows with two or more infinite contributions
    are skipped; with exactly one, only the variable carrying it is tightened.
    """
    box = box.copy()
    if np.any(box.lb > box.ub):
        return Propagation(box, conflict_row=-1)
    A = inst.A
    j, a, i = A.indices, A.data, inst.row_of_nnz
    b = inst.b
    tol = inst.row_tol(feas_tol)
    is_int = box.is_int

    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        lb, ub = box.lb, box.ub
        contrib, inf, lfin, ninf = _min_activity(inst, lb, ub)
        bad = np.flatnonzero((ninf == 0) & (lfin > b + tol))
        if bad.size:
            return Propagation(box, conflict_row=int(bad[0]), rounds=rounds)

        ni = ninf[i]
        usable = (ni == 0) | ((ni == 1) & inf)
        rest = np.where(ni == 0, lfin[i] - contrib, lfin[i])
        bound = (b[i] - rest) / a
        bound = bound + 1e-12 * np.maximum(1.0, np.abs(bound)) * np.sign(a)

        up = usable & (a > 0)
        dn = usable & (a < 0)
        ub_new = np.full(inst.n, np.inf)
        lb_new = np.full(inst.n, -np.inf)
        np.minimum.at(ub_new, j[up], bound[up])
        np.maximum.at(lb_new, j[dn], bound[dn])
        ub_new = np.where(is_int, np.floor(ub_new + INT_TOL), ub_new)
        lb_new = np.where(is_int, np.ceil(lb_new - INT_TOL), lb_new)

        tighten_ub = ub_new < ub - CHANGE_TOL
        tighten_lb = lb_new > lb + CHANGE_TOL
        if not (tighten_ub.any() or tighten_lb.any()):
            break
        box.ub = np.where(tighten_ub, ub_new, ub) + 0.0
        box.lb = np.where(tighten_lb, lb_new, lb) + 0.0

        cross = box.lb > box.ub
        if cross.any():
            slack = feas_tol * np.maximum(1.0, np.abs(box.ub))
            hard = cross & (is_int | (box.lb > box.ub + slack))
            if hard.any():
                col = int(np.flatnonzero(hard)[0])
                src = up if tighten_ub[col] else dn
                hit = np.flatnonzero(src & (j == col))
                if tighten_ub[col]:
                    row = int(i[hit[np.argmin(bound[hit])]])
                else:
                    row = int(i[hit[np.argmax(bound[hit])]])
                return Propagation(box, conflict_row=row, rounds=rounds)
            mid = 0.5 * (box.lb + box.ub)
            box.lb = np.where(cross, mid, box.lb)
            box.ub = np.where(cross, mid, box.ub)
    return Propagation(box, rounds=rounds)
