import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

from mipfolio.fixtures import FIXTURES, brute_force_best_shift, brute_force_mip_opt, gen_random_mip, load_fixture
from mipfolio.model import build_instance
from mipfolio.scoring import AssignmentState, init_weights

KNOWN_OPTIMA = {
    "knapsack": -54.0, "setcover": 8.0, "setpartition": 7.0, "equality": 11.0, "ranged": -21.0,
    "freebound": -3.0, "maximize": 250.0, "lponly": 29.0, "infeasible": None, "chain": 11.75,
}


def test_generator_reproducible_and_distinct():
    a = [gen_random_mip(s, 5, 6) for s in (1, 2, 3)]
    b = [gen_random_mip(s, 5, 6) for s in (1, 2, 3)]
    for x, y in zip(a, b):
        assert (x.A != y.A).nnz == 0 and np.array_equal(x.b, y.b) and np.array_equal(x.lb, y.lb)
    assert len({x.A.toarray().tobytes() + x.b.tobytes() for x in a}) == 3


def test_generator_density_one_and_degenerate():
    inst = gen_random_mip(0, 5, 4, coef=(1, 3), density=1.0)
    assert inst.A.nnz == 20
    one = gen_random_mip(9, 1, 1)
    assert one.n == 1 and one.m == 1 and one.A.nnz == 1
    with pytest.raises(ValueError):
        gen_random_mip(0, 0, 1)


def test_generator_every_column_used():
    for seed in range(30):
        inst = gen_random_mip(seed, 6, 3, density=0.1)
        assert np.all(np.diff(inst.Ac.indptr) > 0)


def test_feasible_point_option():
    for seed in range(20):
        inst = gen_random_mip(seed, 4, 4, feasible_point=True, bound_range=(-2, 2))
        assert brute_force_mip_opt(inst) is not None


def test_best_shift_oracle_examples():
    inst = build_instance([0], [[1.0], [-1.0]], [2.0, -1.0], [0], [3], [True])
    s = AssignmentState(inst, [0.0])
    assert brute_force_best_shift(inst, s, init_weights(inst), 0) == (1.0, 1.0)
    inst = build_instance([0, 0], sp.csr_matrix([[1.0, 0.0]]), [1.0], [0, -2], [3, 2], [True, True])
    s = AssignmentState(inst, [0.0, 0.0])
    assert brute_force_best_shift(inst, s, init_weights(inst), 1) == (0.0, 0.0)
    # single violated row -x <= -5: the jump to 5 earns w
    inst = build_instance([0], [[-1.0]], [-5.0], [0], [10], [False])
    s = AssignmentState(inst, [0.0])
    assert brute_force_best_shift(inst, s, init_weights(inst), 0) == (5.0, 1.0)
    # unbounded continuous column without breakpoints falls back
    inst = build_instance([0, 0], [[1.0, 0.0]], [1.0], [0, -np.inf], [1, np.inf], [True, False])
    s = AssignmentState(inst, [0.0, 0.0])
    assert brute_force_best_shift(inst, s, init_weights(inst), 1) == (0.0, 0.0)


def test_mip_oracle_knapsack_by_enumeration():
    rng = np.random.default_rng(4)
    n = 10
    wgt, val = rng.integers(3, 20, n), rng.integers(1, 30, n)
    cap = int(wgt.sum() // 3)
    inst = build_instance(-val, [wgt], [cap], np.zeros(n), np.ones(n), [True] * n)
    best = max(int(val @ np.array(p)) for p in itertools.product((0, 1), repeat=n) if wgt @ np.array(p) <= cap)
    x, z = brute_force_mip_opt(inst)
    assert z == -best and wgt @ x <= cap


def test_mip_oracle_infeasible_and_empty():
    inst = build_instance([0, 0], [[-1, -1]], [-3], [0, 0], [1, 1], [True, True])
    assert brute_force_mip_opt(inst) is None
    empty = build_instance(np.zeros(0), sp.csr_matrix((0, 0)), np.zeros(0), np.zeros(0), np.zeros(0),
                           np.zeros(0, bool))
    x, z = brute_force_mip_opt(empty)
    assert z == 0.0 and x.size == 0


def test_mip_oracle_rejects_large_grid():
    inst = build_instance([0] * 7, [[1] * 7], [100], [0] * 7, [9] * 7, [True] * 7)
    with pytest.raises(ValueError):
        brute_force_mip_opt(inst)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_optima(name):
    inst = load_fixture(name)
    res = brute_force_mip_opt(inst)
    if KNOWN_OPTIMA[name] is None:
        assert res is None
        return
    assert res[1] == pytest.approx(KNOWN_OPTIMA[name], abs=1e-6)
    # independent cross-check with HiGHS branch and bound
    lb = np.where(np.isfinite(inst.lb), inst.lb, -np.inf)
    ref = milp(inst.c, constraints=LinearConstraint(inst.A, -np.inf, inst.b), integrality=inst.is_int.astype(int),
               bounds=Bounds(lb, inst.ub))
    assert inst.user_objective(ref.x) == pytest.approx(KNOWN_OPTIMA[name], abs=1e-6)
