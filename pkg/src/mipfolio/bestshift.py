"""Exact best-shift moves for non-binary columns via sort, scan and argmax.

For a column ``j`` every row touching it contributes a breakpoint, the value
of ``x_j`` at which the row becomes tight. The move score is a step function
of the new value with steps only at breakpoints, so each row is encoded as
``(value, marker, delta)`` triplets plus two scalars: ``beta``, the score
far to the left, and ``alpha``, the offset that applies strictly right of
the incumbent. Sorting the triplets, prefix-summing the deltas and taking
an argmax over the marker ``-1`` entries yields the exact global best move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import segmented
from .model import ProblemInstance
from .scoring import AssignmentState

# relative distance under which a breakpoint of an integer column is taken
# as the integer itself before rounding
SNAP_TOL = 1e-9


@dataclass
class ColumnShiftProblem:
    j: int
    xbar: float
    lb: float
    ub: float
    beta: float
    alpha: float
    values: np.ndarray
    markers: np.ndarray
    deltas: np.ndarray

    @property
    def triplets(self) -> list[tuple[float, int, float]]:
        return list(zip(self.values.tolist(), self.markers.tolist(), self.deltas.tolist()))


def _column_rows(inst: ProblemInstance, state: AssignmentState, weights, j: int):
    """Rows of column ``j`` as ``(row ids, coefficients, residuals, weights)``, cutoff row last."""
    rows, a = inst.column(j)
    r = state.r[rows]
    w = np.asarray(weights, dtype=np.float64)[rows]
    if state.cutoff is not None and inst.c[j] != 0.0:
        rows = np.append(rows, inst.m)
        a = np.append(a, inst.c[j])
        r = np.append(r, state.r_cut)
        w = np.append(w, weights[inst.m])
    return rows, a, r, w


def _round_breakpoint(t, a, is_int):
    """Floor (``a > 0``) or ceil (``a < 0``) integer breakpoints, snapping near-integers first."""
    t = np.asarray(t, dtype=np.float64)
    tr = np.round(t)
    snap = np.abs(t - tr) <= SNAP_TOL * np.maximum(1.0, np.abs(t))
    ti = np.where(snap, tr, np.where(a > 0, np.floor(t), np.ceil(t)))
    return np.where(is_int, ti, t)


def breakpoint(inst: ProblemInstance, state: AssignmentState, i: int, j: int) -> float:
    """Value of ``x_j`` at which row ``i`` is tight, others held at the incumbent.

    ``i == inst.m`` addresses the objective cutoff row when one is active.
    """
    if i == inst.m and state.cutoff is not None:
        a, r = inst.c[j], state.r_cut
    else:
        rows, coefs = inst.column(j)
        hit = np.flatnonzero(rows == i)
        if hit.size == 0:
            raise ValueError(f"a[{i}, {j}] is zero")
        a, r = coefs[hit[0]], state.r[i]
    t = state.x[j] - r / a
    return float(_round_breakpoint(t, a, inst.is_int[j]))


def _finite_bound_entries(lb, ub, xbar, t_all):
    """Bound values used as candidates; infinite bounds move just past the extreme breakpoint."""
    out = []
    if math.isfinite(lb):
        out.append(lb)
    elif t_all.size:
        out.append(min(float(t_all.min()), xbar) - 1.0)
    if math.isfinite(ub):
        out.append(ub)
    elif t_all.size:
        out.append(max(float(t_all.max()), xbar) + 1.0)
    return out


def build_column_problem(inst: ProblemInstance, state: AssignmentState, weights, j: int) -> ColumnShiftProblem:
    """Breakpoint triplets and the ``beta``/``alpha`` accumulators of column ``j``."""
    if inst.is_binary[j]:
        raise ValueError(f"column {j} is binary; use flip_scores_batch")
    xbar = float(state.x[j])
    lb, ub = float(inst.lb[j]), float(inst.ub[j])
    rows, a, r, w = _column_rows(inst, state, weights, j)
    t_all = _round_breakpoint(xbar - r / a, a, inst.is_int[j])

    beta = 0.0
    alpha = 0.0
    vals: list[float] = []
    marks: list[int] = []
    dels: list[float] = []
    for t, aij, wi in zip(t_all.tolist(), a.tolist(), w.tolist()):
        if aij < 0:  # row needs x_j >= t
            if xbar < t:
                beta -= 0.5 * wi
                alpha += wi
                vals.append(t); marks.append(-1); dels.append(0.5 * wi)
            elif xbar > t:
                beta -= wi
                vals.append(t); marks.append(-1); dels.append(wi)
            else:
                beta -= wi
                alpha += wi
        else:  # row needs x_j <= t
            if xbar > t:
                beta += wi
                alpha -= wi
                vals += [t, t]; marks += [-1, 1]; dels += [0.0, -0.5 * wi]
            elif xbar < t:
                vals += [t, t]; marks += [-1, 1]; dels += [0.0, -wi]
            else:
                alpha -= wi

    bounds = _finite_bound_entries(lb, ub, xbar, t_all)
    vals = bounds + vals
    marks = [-1] * len(bounds) + marks
    dels = [0.0] * len(bounds) + dels
    return ColumnShiftProblem(
        j=j, xbar=xbar, lb=lb, ub=ub, beta=beta, alpha=alpha,
        values=np.array(vals, dtype=np.float64), markers=np.array(marks, dtype=np.int64),
        deltas=np.array(dels, dtype=np.float64),
    )


def solve_column(problem: ColumnShiftProblem) -> tuple[float, float]:
    """Best shift ``(value, score)``; ``(xbar, 0)`` when nothing improves."""
    p = problem
    if p.values.size == 0:
        return p.xbar, 0.0
    order = np.lexsort((p.deltas, p.markers, p.values))
    v, mk, d = p.values[order], p.markers[order], p.deltas[order]
    prefix = np.cumsum(d)
    sigma = p.beta + prefix + p.alpha * (v > p.xbar)

    cand = (mk == -1) & (v >= p.lb) & (v <= p.ub) & (v != p.xbar)
    if not cand.any():
        return p.xbar, 0.0
    best = sigma[cand].max()
    if best <= 0.0:
        return p.xbar, 0.0
    tie = cand & (sigma == best)
    dist = np.abs(v - p.xbar)
    tie &= dist == dist[tie].min()
    return float(v[tie].min()), float(best)


def best_shift(inst, state, weights, j) -> tuple[float, float]:
    return solve_column(build_column_problem(inst, state, weights, j))


def best_shifts_batch(inst: ProblemInstance, state: AssignmentState, weights, columns):
    """Best shifts of many non-binary columns at once.

    All triplets are generated in one vectorized pass and concatenated into
    segments, one per column; segments are bucketed by length, sorted
    (sorting networks for length <= 16, general sort otherwise), scanned and
    reduced row-wise. Returns ``(values, scores)`` aligned with ``columns``.
    """
    columns = np.asarray(columns, dtype=np.int64)
    k = columns.size
    if k and inst.is_binary[columns].any():
        raise ValueError(f"column {columns[inst.is_binary[columns]][0]} is binary; use flip_scores_batch")
    out_v = state.x[columns].astype(np.float64)
    out_s = np.zeros(k)
    if k == 0:
        return out_v, out_s
    w_all = np.asarray(weights, dtype=np.float64)

    Ac = inst.Ac
    starts, ends = Ac.indptr[columns], Ac.indptr[columns + 1]
    counts = ends - starts
    seg = np.repeat(np.arange(k), counts)
    nz = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts) + np.repeat(starts, counts)
    rows = Ac.indices[nz]
    a = Ac.data[nz]
    r = state.r[rows]
    w = w_all[rows]
    if state.cutoff is not None:
        cz = np.flatnonzero(inst.c[columns] != 0.0)
        seg = np.concatenate((seg, cz))
        a = np.concatenate((a, inst.c[columns[cz]]))
        r = np.concatenate((r, np.full(cz.size, state.r_cut)))
        w = np.concatenate((w, np.full(cz.size, w_all[inst.m])))

    xbar_c = state.x[columns]
    xb = xbar_c[seg]
    isint = inst.is_int[columns][seg]
    t = _round_breakpoint(xb - r / a, a, isint)

    neg, pos = a < 0, a > 0
    neg_lt, neg_gt, neg_eq = neg & (xb < t), neg & (xb > t), neg & (xb == t)
    pos_gt, pos_lt, pos_eq = pos & (xb > t), pos & (xb < t), pos & (xb == t)

    zero = np.zeros_like(w)
    beta_c = np.select([neg_lt, neg_gt | neg_eq, pos_gt], [-0.5 * w, -w, w], zero)
    alpha_c = np.select([neg_lt | neg_eq, pos_gt | pos_eq], [w, -w], zero)
    beta = np.bincount(seg, weights=beta_c, minlength=k)
    alpha = np.bincount(seg, weights=alpha_c, minlength=k)

    first = neg_lt | neg_gt | pos_gt | pos_lt
    first_d = np.select([neg_lt, neg_gt], [0.5 * w, w], zero)
    second = pos_gt | pos_lt
    second_d = np.where(pos_gt, -0.5 * w, -w)

    # bound entries, infinite bounds replaced past the extreme breakpoint
    tmin = np.full(k, np.inf)
    tmax = np.full(k, -np.inf)
    np.minimum.at(tmin, seg, t)
    np.maximum.at(tmax, seg, t)
    has_bp = np.bincount(seg, minlength=k) > 0
    lb_c, ub_c = inst.lb[columns], inst.ub[columns]
    lo_v = np.where(np.isfinite(lb_c), lb_c, np.minimum(tmin, xbar_c) - 1.0)
    hi_v = np.where(np.isfinite(ub_c), ub_c, np.maximum(tmax, xbar_c) + 1.0)
    lo_ok = np.isfinite(lb_c) | has_bp
    hi_ok = np.isfinite(ub_c) | has_bp
    cols_idx = np.arange(k)

    seg_all = np.concatenate((cols_idx[lo_ok], cols_idx[hi_ok], seg[first], seg[second]))
    v_all = np.concatenate((lo_v[lo_ok], hi_v[hi_ok], t[first], t[second]))
    m_all = np.concatenate((np.full(lo_ok.sum() + hi_ok.sum() + first.sum(), -1), np.ones(second.sum()))).astype(np.int64)
    d_all = np.concatenate((np.zeros(lo_ok.sum() + hi_ok.sum()), first_d[first], second_d[second]))

    blocks = segmented.pad_segments(seg_all, k, v_all, m_all, d_all)
    for width, (ids, (V, M, D)) in blocks.items():
        V, M, D = segmented.sort_rows(V, M, D)
        P = segmented.inclusive_scan_rows(D)
        xb_rows = xbar_c[ids]
        S = beta[ids][:, None] + P + alpha[ids][:, None] * (V > xb_rows[:, None])
        val, sc = segmented.argmax_rows(V, M, S, xb_rows, lb_c[ids], ub_c[ids])
        out_v[ids] = val
        out_s[ids] = sc
    return out_v, out_s
