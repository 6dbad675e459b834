"""Best shift on a two-row column, step by step.

The column x (integer in [0, 3]) appears in ``x <= 2`` and ``x >= 1``.
Starting from x = 0 the second row is violated. We build the sorted
breakpoint list, read off the score of every candidate value and compare
with exhaustive enumeration.
"""

import numpy as np

from mipfolio import build_instance
from mipfolio.bestshift import best_shifts_batch, build_column_problem, solve_column
from mipfolio.fixtures import brute_force_best_shift
from mipfolio.scoring import AssignmentState, init_weights, score_move

inst = build_instance([0], [[1.0], [-1.0]], [2.0, -1.0], [0], [3], [True])
state = AssignmentState(inst, [0.0])
w = init_weights(inst)

p = build_column_problem(inst, state, w, 0)
print(f"beta={p.beta} alpha={p.alpha}")
order = np.lexsort((p.deltas, p.markers, p.values))
for v, mk, d in zip(p.values[order], p.markers[order], p.deltas[order]):
    print(f"  value {v:4.1f}  marker {int(mk):+d}  delta {d:+.1f}")

print("scores by enumeration:", {x: score_move(inst, state, w, 0, float(x)) for x in range(4)})
print("solve_column           ->", solve_column(p))
print("batched path           ->", tuple(float(a[0]) for a in best_shifts_batch(inst, state, w, [0])))
print("brute-force oracle     ->", brute_force_best_shift(inst, state, w, 0))
