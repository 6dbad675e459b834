import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mipfolio.metrics import IncumbentTrace, integrate_gaps, primal_gap, primal_integral, shifted_geomean


def test_primal_gap_examples():
    assert primal_gap(3.0, 3.0) == 0.0
    assert primal_gap(2.0, 1.0) == 0.5
    assert primal_gap(-1.0, 1.0) == 1.0
    assert primal_gap(None, 1.0) == 1.0
    assert primal_gap(0.0, 0.0) == 0.0
    assert primal_gap(0.0, 4.0) == 1.0


@given(z=st.floats(-1e6, 1e6), ref=st.floats(-1e6, 1e6))
def test_primal_gap_range(z, ref):
    assert 0.0 <= primal_gap(z, ref) <= 1.0


def test_step_integral_example():
    assert integrate_gaps([(1.0, 0.5), (3.0, 0.1)], 5.0) == 2.2


def test_primal_integral_examples():
    assert primal_integral(IncumbentTrace(), 7.0, 300.0) == 300.0
    assert primal_integral([(0.0, 5.0)], 5.0, 10.0) == 0.0
    # gap 0.5 from t=1 (z=2 against 1), gap 0 from t=3
    assert primal_integral([(1.0, 2.0), (3.0, 1.0)], 1.0, 5.0) == 2.0
    # records after the horizon are ignored
    assert primal_integral([(1.0, 2.0), (9.0, 1.0)], 1.0, 5.0) == 1.0 + 0.5 * 4.0


def test_shifted_geomean_examples():
    assert abs(shifted_geomean([1, 3], 1.0) - (math.sqrt(8) - 1)) <= 1e-12
    assert shifted_geomean([0], 1.0) == 0.0
    assert shifted_geomean([4.0, 4.0, 4.0]) == pytest.approx(4.0, abs=1e-12)
    with pytest.raises(ValueError):
        shifted_geomean([])
    with pytest.raises(ValueError):
        shifted_geomean([1.0], 0.0)


def test_trace_ndjson_round_trip(tmp_path):
    tr = IncumbentTrace()
    tr.append(0.25, 10.0, "tabu-0")
    tr.append(1.5, 7.0, "fpr")
    text = tr.to_ndjson()
    assert text.splitlines()[0] == '{"elapsed_seconds": 0.25, "objective": 10.0, "source": "tabu-0"}'
    path = tmp_path / "t.ndjson"
    tr.write(path)
    back = IncumbentTrace.read(path)
    assert back.records == tr.records and len(back) == 2
