"""Tiny instance generators, bundled MPS fixtures and brute-force oracles.

The oracles deliberately share nothing with the search code except
:func:`mipfolio.scoring.penalty`: scores are recomputed from dense
matrices, and optima come from exhaustive enumeration.
"""

from __future__ import annotations

import itertools
import math
from importlib import resources

import numpy as np
from scipy.optimize import linprog

from .model import ProblemInstance, build_instance, load
from .scoring import penalty

FIXTURES = (
    "knapsack", "setcover", "setpartition", "equality", "ranged", "freebound",
    "maximize", "lponly", "infeasible", "chain",
)
MAX_GRID = 10**6


def fixture_path(name: str):
    return resources.files("mipfolio") / "data" / f"{name}.mps"


def load_fixture(name: str) -> ProblemInstance:
    with resources.as_file(fixture_path(name)) as p:
        return load(p)


def gen_random_mip(seed: int, n: int = 4, m: int = 4, coef: tuple[int, int] = (-5, 5), density: float = 0.6,
                   bound_range: tuple[int, int] = (-4, 4), int_frac: float = 1.0, binary_frac: float = 0.3,
                   feasible_point: bool = False) -> ProblemInstance:
    """Random small MIP with integer data; every column appears in at least one row.

    Bounds are integers drawn from ``bound_range``; a ``binary_frac`` share
    of the integer columns are binaries. With ``feasible_point`` the
    right-hand sides are set so that a random integer point is feasible.
    """
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = coef
    A = rng.integers(lo, hi + 1, size=(m, n)).astype(np.float64)
    A *= rng.random((m, n)) < density
    for j in range(n):  # no empty columns
        if not A[:, j].any():
            v = 0
            while v == 0:
                v = int(rng.integers(lo, hi + 1)) or (1 if hi > 0 else -1)
            A[rng.integers(m), j] = v
    is_int = rng.random(n) < int_frac
    binary = is_int & (rng.random(n) < binary_frac)
    a = rng.integers(bound_range[0], bound_range[1] + 1, n)
    b_ = rng.integers(bound_range[0], bound_range[1] + 1, n)
    lb = np.minimum(a, b_).astype(np.float64)
    ub = np.maximum(a, b_).astype(np.float64)
    lb[binary], ub[binary] = 0.0, 1.0
    c = rng.integers(-5, 6, n).astype(np.float64)
    if feasible_point:
        x0 = np.where(is_int, rng.integers(lb, ub + 1), rng.uniform(lb, ub))
        b = A @ x0 + rng.integers(0, 3, m)
    else:
        b = rng.integers(-3 * n, 3 * n + 1, m).astype(np.float64)
    # drop all-zero rows so every row is meaningful
    keep = np.abs(A).sum(axis=1) > 0
    return build_instance(c, A[keep], b[keep], lb, ub, is_int, name=f"random-{seed}")


def dense_parts(inst: ProblemInstance):
    return inst.A.toarray(), inst.b.copy(), inst.c.copy()


def _score_dense(A, b, c, weights, x, j, v, cutoff):
    """Score of ``x_j <- v`` recomputed from scratch on dense data."""
    y = x.copy()
    y[j] = v
    r_old = A @ x - b
    r_new = A @ y - b
    s = math.fsum(penalty(weights[i], r_old[i], r_new[i]) for i in range(A.shape[0]) if A[i, j] != 0.0)
    if cutoff is not None and c[j] != 0.0:
        s += penalty(weights[A.shape[0]], c @ x - cutoff, c @ y - cutoff)
    return s


def brute_force_best_shift(inst: ProblemInstance, state, weights, j: int, cutoff=None) -> tuple[float, float]:
    """Exhaustive best shift for column ``j``.

    Integer columns with finite bounds try every value of the domain;
    otherwise the candidates are the row breakpoints (floored or ceiled for
    integers, clipped into the bounds) plus the finite bounds. Ties go to the
    value closest to the incumbent, then to the smaller one. Returns
    ``(xbar_j, 0)`` when no candidate scores above zero.
    """
    A, b, c = dense_parts(inst)
    x = np.asarray(state.x, dtype=np.float64)
    if cutoff is None:
        cutoff = getattr(state, "cutoff", None)
    xbar = x[j]
    lo, hi = inst.lb[j], inst.ub[j]
    if inst.is_int[j] and np.isfinite(lo) and np.isfinite(hi):
        cands = np.arange(lo, hi + 1.0)
    else:
        cands = [v for v in (lo, hi) if np.isfinite(v)]
        rows = [i for i in range(A.shape[0]) if A[i, j] != 0.0]
        coefs = [(A[i, j], b[i] - (A[i] @ x - A[i, j] * xbar)) for i in rows]
        if cutoff is not None and c[j] != 0.0:
            coefs.append((c[j], cutoff - (c @ x - c[j] * xbar)))
        for a, rest in coefs:
            t = rest / a
            if inst.is_int[j]:
                near = round(t)
                if abs(t - near) <= 1e-9 * max(1.0, abs(t)):
                    t = float(near)
                t = math.floor(t) if a > 0 else math.ceil(t)
            cands.append(min(max(t, lo), hi))
        cands = np.array(sorted(set(cands)), dtype=np.float64)
    best_v, best_s = xbar, 0.0
    for v in cands:
        if v == xbar:
            continue
        s = _score_dense(A, b, c, weights, x, j, float(v), cutoff)
        if s > best_s or (s == best_s and s > 0 and (abs(v - xbar), v) < (abs(best_v - xbar), best_v)):
            best_v, best_s = float(v), s
    return best_v, best_s


def brute_force_mip_opt(inst: ProblemInstance, feas_tol: float = 1e-6) -> tuple[np.ndarray, float] | None:
    """Exact optimum by enumerating every integer assignment.

    Continuous columns are completed per assignment with an exact LP
    (HiGHS through :func:`scipy.optimize.linprog`). Returns ``None`` when no
    assignment is feasible; the objective is in the user's sense.
    """
    ints = np.flatnonzero(inst.is_int)
    cont = np.flatnonzero(~inst.is_int)
    lo, hi = inst.lb[ints], inst.ub[ints]
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("integer columns need finite bounds for enumeration")
    sizes = (hi - lo + 1).astype(np.int64)
    if math.prod(sizes.tolist()) > MAX_GRID:
        raise ValueError(f"integer grid has {math.prod(sizes.tolist())} points, more than {MAX_GRID}")
    A, b, c = dense_parts(inst)
    tol = feas_tol * np.maximum(1.0, np.abs(b))
    A_int, A_cont = A[:, ints], A[:, cont]

    if ints.size == 0:
        grid = np.zeros((1, 0))
    else:
        grid = np.array(list(itertools.product(*[np.arange(l, h + 1.0) for l, h in zip(lo, hi)])))
    act = grid @ A_int.T
    best = None
    if cont.size == 0:
        ok = np.all(act - b <= tol, axis=1)
        if not ok.any():
            return None
        obj = grid @ c[ints]
        obj[~ok] = np.inf
        k = int(np.argmin(obj))
        x = np.zeros(inst.n)
        x[ints] = grid[k]
        return x, inst.user_objective(x)
    bounds = list(zip(np.where(np.isfinite(inst.lb[cont]), inst.lb[cont], None),
                      np.where(np.isfinite(inst.ub[cont]), inst.ub[cont], None)))
    for k in range(grid.shape[0]):
        rest = b - act[k]
        res = linprog(c[cont], A_ub=A_cont, b_ub=rest, bounds=bounds, method="highs")
        if res.status != 0:
            continue
        z = float(c[ints] @ grid[k] + res.fun)
        if best is None or z < best[1] - 1e-12:
            x = np.zeros(inst.n)
            x[ints] = grid[k]
            x[cont] = res.x
            best = (x, z)
    if best is None:
        return None
    return best[0], inst.user_objective(best[0])
