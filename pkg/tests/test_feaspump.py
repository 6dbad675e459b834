import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mipfolio.feaspump import ALPHA_DECAY, distance_lp, pump, repair_partial
from mipfolio.lp import LinearProgram, LpSnapshot, pdhg_run
from mipfolio.model import build_instance, validate_solution
from mipfolio.pool import SolutionPool


def _snap(primal):
    return LpSnapshot(primal=np.asarray(primal, float), duals=np.zeros(0), reduced_costs=np.zeros(len(primal)),
                      iterations=0, checkpoint_id=0, primal_residual=0.0, gap=0.0, kkt=0.0,
                      objective=0.0, timestamp=0.0)


def _cover_pair():
    # x1 + x2 >= 1, binaries, min x1 + x2
    return build_instance([1, 1], [[-1, -1]], [-1], [0, 0], [1, 1], [True, True])


def test_integral_feasible_snapshot_returns_immediately():
    inst = _cover_pair()
    res = pump(inst, _snap([1.0, 0.0]))
    assert res.feasible and res.iterations == 1 and res.projections == 0
    assert res.x.tolist() == [1.0, 0.0]


def test_half_snapshot_feasible_in_one_iteration():
    inst = _cover_pair()
    pool = SolutionPool(inst)
    res = pump(inst, _snap([0.5, 0.5]), pool=pool)
    assert res.feasible and res.iterations == 1
    assert validate_solution(inst, res.x, 1e-6)
    assert pool.best_incumbent() is not None


def test_cycling_instance_flips():
    # 2 x1 + 2 x2 = 1 has LP points but no integer point, so the rounding repeats
    inst = build_instance([0, 0], [[2, 2], [-2, -2]], [1, -1], [0, 0], [1, 1], [True, True])
    pool = SolutionPool(inst)
    res = pump(inst, _snap([0.25, 0.25]), pool=pool, max_iters=6, seed=3)
    assert res.status == "partial" and res.cycles >= 1
    assert res.violation == min(res.rounded_violations)
    assert pool.best_partial() is not None
    # the flipped point differs from the repeated rounding, so the visited violations change
    assert len(set(res.rounded_violations)) > 1


def test_alpha_schedule_is_geometric():
    inst = build_instance([0, 0], [[2, 2], [-2, -2]], [1, -1], [0, 0], [1, 1], [True, True])
    res = pump(inst, _snap([0.25, 0.25]), max_iters=12)
    assert len(res.alphas) == res.projections == 12
    for k, a in enumerate(res.alphas):
        assert a == ALPHA_DECAY ** k
    assert all(b < a for a, b in zip(res.alphas, res.alphas[1:])) and res.alphas[-1] > 0


def test_distance_lp_layout():
    inst = build_instance([3, 4, 0], [[1, 1, 1]], [5], [0, 0, 0], [1, 1, 4], [True, True, True])
    lp, d = distance_lp(inst, [0.0, 1.0, 2.0], alpha=0.0)
    # binaries enter linearly, the interior general integer gets two slack columns
    assert d.tolist() == [1.0, -1.0, 0.0, 1.0, 1.0]
    assert lp.n == 5 and lp.m == 3
    snap = pdhg_run(lp, checkpoints=(1000, 10_000))
    assert np.allclose(snap.primal[:3], [0.0, 1.0, 2.0], atol=1e-4)
    lp, _ = distance_lp(inst, [0.0, 1.0, 2.0], alpha=1.0, cutoff=2.0)
    assert lp.m == 4 and lp.b[-1] == 2.0
    assert np.allclose(lp.c[:3], np.array([3, 4, 0]) / 5.0)


def test_repair_examples():
    inst = _cover_pair()
    res = repair_partial(inst, [1.0, 1.0])
    assert res.feasible and res.iterations == 0
    # one flip away from feasibility
    pool = SolutionPool(inst)
    res = repair_partial(inst, [0.0, 0.0], pool=pool)
    assert res.feasible and res.iterations <= 2
    assert pool.best_incumbent() is not None
    res = repair_partial(inst, [0.0, 0.0], iter_cap=0)
    assert res.status == "partial" and res.x.tolist() == [0.0, 0.0] and res.violation == 1.0


def _random_binary(seed, n=10, m=6):
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, (m, n)).astype(float)
    x0 = rng.integers(0, 2, n).astype(float)
    b = A @ x0 + rng.integers(0, 2, m)
    return build_instance(rng.integers(-5, 6, n), A, b, np.zeros(n), np.ones(n), [True] * n)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_returned_point_is_best_visited(seed):
    inst = _random_binary(seed)
    snap = pdhg_run(_relaxation(inst), checkpoints=(1000,))
    res = pump(inst, snap, max_iters=15, seed=seed)
    if res.feasible:
        assert validate_solution(inst, res.x, 1e-6)
    else:
        assert res.violation <= min(res.rounded_violations) + 1e-9
    assert np.all(res.x >= inst.lb) and np.all(res.x <= inst.ub)


def _relaxation(inst):
    return LinearProgram(c=inst.c, A=inst.A, b=inst.b, lb=inst.lb, ub=inst.ub)


def test_deadline_zero_returns_partial():
    inst = _cover_pair()
    res = pump(inst, _snap([0.0, 0.0]), deadline=0.0)
    assert res.status == "partial" and res.iterations == 0 and res.violation == pytest.approx(1.0)
