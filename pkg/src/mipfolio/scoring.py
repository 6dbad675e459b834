"""Residual-based assignment state, constraint weights and move scores.

A row ``a_i x <= b_i`` enters every score only through its residual
``r_i = a_i x - b_i`` (violated iff ``r_i > 0``), so the state keeps
residuals rather than activities. Binary entries of the point are mirrored
in a packed bitset that the batched flip scorer reads.
"""

from __future__ import annotations

import numpy as np

from .model import FEAS_TOL, ProblemInstance

WEIGHT_CAP = 1e6


def penalty(w: float, r_old: float, r_new: float) -> float:
    """Score contribution of one row when its residual moves from ``r_old`` to ``r_new``."""
    old_sat = r_old <= 0.0
    new_sat = r_new <= 0.0
    if old_sat and not new_sat:
        return -w
    if not old_sat and new_sat:
        return w
    if not old_sat and not new_sat:
        if r_new < r_old:
            return 0.5 * w
        if r_new > r_old:
            return -0.5 * w
    return 0.0


def penalty_vec(w, r_old, r_new) -> np.ndarray:
    """Elementwise :func:`penalty`."""
    w = np.asarray(w, dtype=np.float64)
    old_viol = r_old > 0.0
    new_viol = r_new > 0.0
    out = np.zeros(np.broadcast(w, r_old, r_new).shape)
    out = np.where(~old_viol & new_viol, -w, out)
    out = np.where(old_viol & ~new_viol, w, out)
    both = old_viol & new_viol
    out = np.where(both & (r_new < r_old), 0.5 * w, out)
    out = np.where(both & (r_new > r_old), -0.5 * w, out)
    return out


def init_weights(inst: ProblemInstance) -> np.ndarray:
    """One weight per row plus a trailing slot for the objective cutoff row."""
    return np.ones(inst.m + 1)


class AssignmentState:
    """A candidate point together with its row residuals.

    ``cutoff`` is the right-hand side of the optional objective row
    ``c x <= cutoff``; its residual is ``objective - cutoff``.
    """

    def __init__(self, inst: ProblemInstance, x, feas_tol: float = FEAS_TOL, cutoff: float | None = None):
        x = np.array(x, dtype=np.float64)
        if x.shape != (inst.n,):
            raise ValueError(f"point has shape {x.shape}, expected ({inst.n},)")
        self.x = x
        self.feas_tol = feas_tol
        self.tol = inst.row_tol(feas_tol)
        self.cutoff = cutoff
        self.recompute(inst)

    def recompute(self, inst: ProblemInstance) -> None:
        self.r = inst.A @ self.x - inst.b
        self.violated = int(np.count_nonzero(self.r > self.tol))
        self.objective = float(inst.c @ self.x)
        xb = self.x[inst.binaries] > 0.5
        self.bits = np.packbits(xb, bitorder="little")

    def copy(self) -> "AssignmentState":
        new = object.__new__(AssignmentState)
        new.__dict__.update(self.__dict__)
        new.x = self.x.copy()
        new.r = self.r.copy()
        new.bits = self.bits.copy()
        return new

    @property
    def r_cut(self) -> float:
        if self.cutoff is None:
            return -np.inf
        return self.objective - self.cutoff

    def set_cutoff(self, cutoff: float | None) -> None:
        self.cutoff = cutoff

    def bit(self, p: int) -> int:
        """Value of the ``p``-th binary variable read from the bitset."""
        return int((self.bits[p >> 3] >> (p & 7)) & 1)

    def bits_at(self, pos: np.ndarray) -> np.ndarray:
        return (self.bits[pos >> 3] >> (pos & 7).astype(np.uint8)) & 1

    def is_feasible(self) -> bool:
        return self.violated == 0 and self.r_cut <= 0.0

    def total_violation(self) -> float:
        return float(np.maximum(self.r, 0.0).sum())


def _cutoff_term(inst, state, weights, j, d) -> float:
    if state.cutoff is None or inst.c[j] == 0.0:
        return 0.0
    r = state.r_cut
    return penalty(weights[inst.m], r, r + inst.c[j] * d)


def score_move(inst: ProblemInstance, state: AssignmentState, weights, j: int, value: float) -> float:
    """Weighted score of setting ``x_j`` to ``value``, all else fixed."""
    if not 0 <= j < inst.n:
        raise IndexError(f"column {j} out of range")
    d = value - state.x[j]
    rows, a = inst.column(j)
    r_old = state.r[rows]
    s = float(np.sum(penalty_vec(weights[rows], r_old, r_old + a * d)))
    return s + _cutoff_term(inst, state, weights, j, d)


def flip_scores_batch(inst: ProblemInstance, state: AssignmentState, weights, columns,
                      layout: str = "row") -> np.ndarray:
    """Flip score of every listed binary column, recomputed from scratch.

    ``layout="row"`` sweeps nonzeros in CSR order: the residual and weight of
    each row are read once and broadcast over the row, the incumbent bit is a
    scattered read from the bitset, and contributions are scatter-added into a
    per-column score array. ``layout="col"`` walks CSC order instead and
    gathers residuals and weights per nonzero.
    """
    columns = np.asarray(columns, dtype=np.int64)
    if columns.size and not inst.is_binary[columns].all():
        bad = columns[~inst.is_binary[columns]][0]
        raise ValueError(f"column {bad} is not binary")
    scores = np.zeros(inst.n)
    if columns.size == 0:
        return scores[columns]
    wanted = np.zeros(inst.n, dtype=bool)
    wanted[columns] = True
    w = np.asarray(weights, dtype=np.float64)

    if layout == "row":
        A = inst.A
        counts = np.diff(A.indptr)
        r_rep = np.repeat(state.r, counts)
        w_rep = np.repeat(w[: inst.m], counts)
        sel = wanted[A.indices]
        j = A.indices[sel]
        bit = state.bits_at(inst.binary_pos[j])
        delta = 1.0 - 2.0 * bit
        r_old = r_rep[sel]
        pen = penalty_vec(w_rep[sel], r_old, r_old + A.data[sel] * delta)
        np.add.at(scores, j, pen)
    elif layout == "col":
        Ac = inst.Ac
        col_of_nnz = np.repeat(np.arange(inst.n), np.diff(Ac.indptr))
        sel = wanted[col_of_nnz]
        j = col_of_nnz[sel]
        i = Ac.indices[sel]
        bit = state.bits_at(inst.binary_pos[j])
        delta = 1.0 - 2.0 * bit
        r_old = state.r[i]
        pen = penalty_vec(w[i], r_old, r_old + Ac.data[sel] * delta)
        scores += np.bincount(j, weights=pen, minlength=inst.n)
    else:
        raise ValueError(f"unknown layout {layout!r}")

    if state.cutoff is not None:
        cj = inst.c[columns]
        nz = cj != 0.0
        if nz.any():
            bit = state.bits_at(inst.binary_pos[columns[nz]])
            r = state.r_cut
            scores[columns[nz]] += penalty_vec(w[inst.m], r, r + cj[nz] * (1.0 - 2.0 * bit))
    return scores[columns]


def apply_move(state: AssignmentState, inst: ProblemInstance, j: int, value: float) -> AssignmentState:
    """Set ``x_j = value`` and update residuals, bitset, objective and violation count in place."""
    if not inst.lb[j] <= value <= inst.ub[j]:
        raise ValueError(f"value {value} outside bounds [{inst.lb[j]}, {inst.ub[j]}] of column {j}")
    if inst.is_int[j]:
        if value != np.round(value):
            raise ValueError(f"non-integral value {value} for integer column {j}")
    d = value - state.x[j]
    if d == 0.0:
        return state
    rows, a = inst.column(j)
    if rows.size:
        tol = state.tol[rows]
        before = np.count_nonzero(state.r[rows] > tol)
        state.r[rows] += a * d
        after = np.count_nonzero(state.r[rows] > tol)
        state.violated += int(after - before)
    state.x[j] = value
    p = inst.binary_pos[j]
    if p >= 0:
        mask = np.uint8(1 << (p & 7))
        if value > 0.5:
            state.bits[p >> 3] |= mask
        else:
            state.bits[p >> 3] &= ~mask
    state.objective += inst.c[j] * d
    return state


def update_weights(weights: np.ndarray, state: AssignmentState, inst: ProblemInstance,
                   cap: float = WEIGHT_CAP, include_cutoff: bool = True) -> np.ndarray:
    """Add one to the weight of every violated row, saturating at ``cap``."""
    viol = np.flatnonzero(state.r > 0.0)
    weights[viol] = np.minimum(weights[viol] + 1.0, cap)
    if include_cutoff and state.cutoff is not None and state.r_cut > 0.0:
        weights[inst.m] = min(weights[inst.m] + 1.0, cap)
    return weights
