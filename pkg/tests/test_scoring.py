import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from mipfolio.fixtures import gen_random_mip
from mipfolio.model import build_instance
from mipfolio.scoring import (
    AssignmentState, apply_move, flip_scores_batch, init_weights, penalty, penalty_vec, score_move, update_weights,
)


@pytest.mark.parametrize("w,r_old,r_new,expected", [
    (1.0, -1.0, 1.0, -1.0),
    (2.0, 2.0, 0.0, 2.0),
    (2.0, 2.0, 1.0, 1.0),
    (1.0, 2.0, 3.0, -0.5),
    (1.0, -1.0, -0.5, 0.0),
    (1.0, 2.0, 2.0, 0.0),
    (3.0, 0.0, 0.0, 0.0),
])
def test_penalty_cases(w, r_old, r_new, expected):
    assert penalty(w, r_old, r_new) == expected
    assert penalty_vec(np.array([w]), np.array([r_old]), np.array([r_new]))[0] == expected


@given(w=st.floats(1, 100), r_old=st.floats(-10, 0), r_new=st.floats(1e-9, 10))
def test_penalty_antisymmetric_at_boundary(w, r_old, r_new):
    assert penalty(w, r_old, r_new) == -w
    assert penalty(w, r_new, r_old) == w


def _binary_pair():
    return build_instance([0, 0], sp.csr_matrix([[1.0, 1.0]]), [1.0], [0, 0], [1, 1], [True, True])


def test_flip_scores_example():
    inst = _binary_pair()
    st_ = AssignmentState(inst, [1.0, 1.0])
    w = init_weights(inst)
    for layout in ("row", "col"):
        assert flip_scores_batch(inst, st_, w, [0, 1], layout=layout).tolist() == [1.0, 1.0]


def test_score_move_examples():
    inst = build_instance([0], [[1.0]], [2.0], [0], [5], [False])
    s = AssignmentState(inst, [3.0])
    assert score_move(inst, s, init_weights(inst), 0, 2.0) == 1.0
    assert score_move(inst, s, init_weights(inst), 0, 3.0) == 0.0
    inst = build_instance([0], [[1.0], [-1.0]], [2.0, -1.0], [0], [5], [True])
    s = AssignmentState(inst, [0.0])
    assert score_move(inst, s, init_weights(inst), 0, 1.0) == 1.0
    with pytest.raises(IndexError):
        score_move(inst, s, init_weights(inst), 3, 1.0)


def test_feasible_point_all_flips_negative():
    # every flip breaks an equality
    A = sp.csr_matrix([[1.0, 1.0, 0.0], [-1.0, -1.0, 0.0], [0.0, 1.0, 1.0], [0.0, -1.0, -1.0]])
    inst = build_instance([0, 0, 0], A, [1, -1, 1, -1], [0] * 3, [1] * 3, [True] * 3)
    s = AssignmentState(inst, [1.0, 0.0, 1.0])
    assert s.is_feasible()
    assert np.all(flip_scores_batch(inst, s, init_weights(inst), [0, 1, 2]) < 0)


def test_empty_column_scores_zero():
    A = sp.csr_matrix([[1.0, 0.0]])
    inst = build_instance([0, 0], A, [0.0], [0, 0], [1, 1], [True, True])
    s = AssignmentState(inst, [1.0, 0.0])
    assert flip_scores_batch(inst, s, init_weights(inst), [1]).tolist() == [0.0]
    apply_move(s, inst, 1, 1.0)
    assert s.r.tolist() == [1.0] and s.x[1] == 1.0


def test_non_binary_column_rejected():
    inst = build_instance([0], [[1.0]], [2.0], [0], [5], [True])
    with pytest.raises(ValueError):
        flip_scores_batch(inst, AssignmentState(inst, [0.0]), init_weights(inst), [0])


def test_apply_move_checks_domain():
    inst = build_instance([0], [[1.0]], [2.0], [0], [5], [True])
    s = AssignmentState(inst, [0.0])
    with pytest.raises(ValueError):
        apply_move(s, inst, 0, 6.0)
    with pytest.raises(ValueError):
        apply_move(s, inst, 0, 1.5)


def test_apply_inverse_restores_state():
    inst = gen_random_mip(3, 6, 8)
    x0 = np.clip(np.zeros(6), inst.lb, inst.ub)
    s = AssignmentState(inst, x0)
    r0 = s.r.copy()
    j = 2
    v = inst.ub[j] if x0[j] != inst.ub[j] else inst.lb[j]
    apply_move(s, inst, j, v)
    apply_move(s, inst, j, x0[j])
    assert np.allclose(s.r, r0, atol=1e-9)


def test_update_weights_rules():
    inst = build_instance([0, 0], [[1.0, 0.0], [0.0, 1.0]], [0.0, 5.0], [0, 0], [3, 3], [True, True])
    s = AssignmentState(inst, [1.0, 0.0])
    w = init_weights(inst)
    update_weights(w, s, inst, cap=1000)
    assert w.tolist() == [2.0, 1.0, 1.0]
    w[0] = 1000
    update_weights(w, s, inst, cap=1000)
    assert w[0] == 1000
    s2 = AssignmentState(inst, [0.0, 0.0])
    before = w.copy()
    update_weights(w, s2, inst)
    assert np.array_equal(w, before)


def test_cutoff_row_in_scores():
    inst = build_instance([1.0, 2.0], sp.csr_matrix((0, 2)), [], [0, 0], [1, 1], [True, True])
    s = AssignmentState(inst, [0.0, 0.0], cutoff=1.5)
    w = init_weights(inst)
    # flipping x2 to 1 pushes objective 2 above the cutoff 1.5
    assert flip_scores_batch(inst, s, w, [0, 1]).tolist() == [0.0, -1.0]
    assert score_move(inst, s, w, 1, 1.0) == -1.0


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 12), m=st.integers(1, 10), cut=st.booleans())
def test_flip_batch_matches_score_move(seed, n, m, cut):
    rng = np.random.default_rng(seed)
    inst = gen_random_mip(seed, n, m, binary_frac=0.7)
    x = np.where(inst.is_binary, rng.integers(0, 2, n), np.clip(np.zeros(n), inst.lb, inst.ub))
    s = AssignmentState(inst, x, cutoff=float(rng.integers(-5, 5)) if cut else None)
    w = rng.integers(1, 5, inst.m + 1).astype(float)
    cols = inst.binaries
    ref = np.array([score_move(inst, s, w, j, 1.0 - x[j]) for j in cols])
    for layout in ("row", "col"):
        got = flip_scores_batch(inst, s, w, cols, layout=layout)
        assert np.allclose(got, ref, atol=1e-9, rtol=0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_residuals_and_bits_track_moves(seed):
    rng = np.random.default_rng(seed)
    inst = gen_random_mip(seed, 6, 8, int_frac=0.7)
    s = AssignmentState(inst, np.clip(np.zeros(6), inst.lb, inst.ub))
    for _ in range(200):
        j = int(rng.integers(6))
        v = float(rng.integers(inst.lb[j], inst.ub[j] + 1)) if inst.is_int[j] else rng.uniform(inst.lb[j], inst.ub[j])
        apply_move(s, inst, j, v)
    ref = AssignmentState(inst, s.x)
    assert np.max(np.abs(s.r - ref.r)) <= 1e-9
    assert s.violated == ref.violated
    assert np.array_equal(s.bits, ref.bits)
    assert s.objective == pytest.approx(ref.objective, abs=1e-9)
    for p, j in enumerate(inst.binaries):
        assert s.bit(p) == int(s.x[j])
