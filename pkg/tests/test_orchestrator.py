import math
import os
import subprocess
import sys

import numpy as np

from mipfolio.cli import main
from mipfolio.fixtures import fixture_path, load_fixture
from mipfolio.metrics import IncumbentTrace
from mipfolio.model import read_mps, read_sol, validate_solution
from mipfolio.orchestrator import EXIT_ERROR, EXIT_FOUND, EXIT_NONE, SolveConfig, solve


def _det(name, **kw):
    kw.setdefault("time_limit", 60.0)
    kw.setdefault("max_rounds", 40)
    return SolveConfig(instance=fixture_path(name), deterministic=True, seed=0, **kw)


def test_tiny_feasible_instance_writes_outputs(tmp_path):
    sol, trace = tmp_path / "k.sol", tmp_path / "k.ndjson"
    rep = solve(SolveConfig(instance=fixture_path("knapsack"), time_limit=2.0, threads=4, sol_out=sol,
                            trace_out=trace))
    assert rep.status == "feasible" and rep.exit_code == EXIT_FOUND
    assert len(rep.trace) >= 1 and trace.read_text().strip()
    inst = load_fixture("knapsack")
    x, obj = read_sol(sol, inst)
    assert validate_solution(inst, x, 1e-6)
    raw = read_mps(fixture_path("knapsack"))
    assert abs(obj - (float(np.dot(raw.c, x)) + raw.obj_offset)) <= 1e-9
    assert rep.elapsed < 2.0 + 1.0


def test_sol_objective_matches_user_sense(tmp_path):
    sol = tmp_path / "m.sol"
    rep = solve(_det("maximize", sol_out=sol))
    inst = load_fixture("maximize")
    x, obj = read_sol(sol, inst)
    raw = read_mps(fixture_path("maximize"))
    user = float(np.dot(raw.c, x)) + raw.obj_offset
    assert abs(obj - user) <= 1e-9 and abs(rep.objective - user) <= 1e-9


def test_deterministic_replay_identical_traces():
    a = solve(_det("setcover"))
    b = solve(_det("setcover"))
    assert a.trace.to_ndjson() == b.trace.to_ndjson()
    assert len(a.trace) >= 1
    assert np.array_equal(a.x, b.x)


def test_trace_strictly_improves():
    rep = solve(_det("knapsack", max_rounds=80))
    objs = [r.objective for r in rep.trace]
    inst = load_fixture("knapsack")
    assert all(inst.sense * (b - a) < 0 for a, b in zip(objs, objs[1:]))
    times = [r.elapsed_seconds for r in rep.trace]
    assert times == sorted(times)


def test_time_limit_zero_exits_with_none():
    rep = solve(SolveConfig(instance=fixture_path("knapsack"), time_limit=0.0))
    assert rep.status == "none" and rep.exit_code == EXIT_NONE and len(rep.trace) == 0


def test_infeasible_fixture_reports_partial():
    rep = solve(_det("infeasible", time_limit=1.0, max_rounds=None))
    assert rep.exit_code == EXIT_NONE
    assert rep.best_partial_violation is None or rep.best_partial_violation > 0


def test_worker_stats_and_wins():
    rep = solve(_det("equality"))
    assert {"lp", "fpr", "feaspump", "tabu-0"} <= set(rep.workers)
    assert sum(s.wins for s in rep.workers.values()) == len(rep.trace)
    assert rep.workers["lp"].iterations > 0


def test_objective_target_stops_early():
    rep = solve(_det("knapsack", objective_target=-54.0, max_rounds=None))
    assert rep.objective == -54.0


def test_cli_solve_and_eval(tmp_path, capsys):
    trace = tmp_path / "t.ndjson"
    sol = tmp_path / "s.sol"
    code = main(["solve", str(fixture_path("setpartition")), "--time-limit", "30", "--deterministic",
                 "--max-rounds", "30", "--trace-out", str(trace), "--sol-out", str(sol)])
    out = capsys.readouterr().out
    assert code == EXIT_FOUND and "status feasible" in out and sol.exists()
    runs = []
    for _ in range(2):
        assert main(["eval", "--trace", str(trace), "--ref", "7", "--horizon", "300"]) == 0
        runs.append(capsys.readouterr().out)
    assert runs[0] == runs[1] and runs[0].startswith("gap ")


def test_cli_eval_known_trace(tmp_path, capsys):
    tr = IncumbentTrace()
    tr.append(1.0, 2.0)
    tr.append(3.0, 1.0)
    path = tmp_path / "t.ndjson"
    tr.write(path)
    main(["eval", "--trace", str(path), "--ref", "1", "--horizon", "5"])
    assert capsys.readouterr().out == "gap 0.0\nprimal_integral 2.0\n"


def test_cli_sgm(capsys):
    assert main(["sgm", "--shift", "1", "1", "3"]) == 0
    assert abs(float(capsys.readouterr().out) - (math.sqrt(8) - 1)) <= 1e-12


def test_cli_bad_mps_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.mps"
    bad.write_text("NAME bad\nROWS\n N obj\nCOLUMNS\n x obj notanumber\nENDATA\n")
    assert main(["solve", str(bad), "--time-limit", "1"]) == EXIT_ERROR
    assert main(["solve", str(tmp_path / "missing.mps"), "--time-limit", "1"]) == EXIT_ERROR
    assert "error" in capsys.readouterr().err


def test_cli_time_limit_zero_exits_2(capsys):
    assert main(["solve", str(fixture_path("knapsack")), "--time-limit", "0"]) == EXIT_NONE


def test_cli_env_override(tmp_path, monkeypatch, capsys):
    trace = tmp_path / "env.ndjson"
    monkeypatch.setenv("MIPFOLIO_TIME_LIMIT", "0")
    assert main(["solve", str(fixture_path("knapsack"))]) == EXIT_NONE
    monkeypatch.setenv("MIPFOLIO_TIME_LIMIT", "20")
    monkeypatch.setenv("MIPFOLIO_DETERMINISTIC", "1")
    monkeypatch.setenv("MIPFOLIO_MAX_ROUNDS", "20")
    monkeypatch.setenv("MIPFOLIO_TRACE_OUT", str(trace))
    assert main(["solve", str(fixture_path("knapsack"))]) == EXIT_FOUND
    assert trace.exists()
    # the command line wins over the environment
    assert main(["solve", str(fixture_path("knapsack")), "--time-limit", "0"]) == EXIT_NONE


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "mipfolio", "sgm", "0"], capture_output=True, text=True,
                         env={**os.environ, "PYTHONPATH": os.pathsep.join(sys.path)})
    assert out.returncode == 0 and out.stdout.strip() == "0.0"
