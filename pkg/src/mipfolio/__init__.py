"""Portfolio primal heuristic for mixed-integer linear programs.

Tabu search with exact best-shift moves, a streaming PDHG LP solver,
fix-and-propagate-and-repair diving and an objective feasibility pump,
all sharing one solution pool.
"""

from .lp import LinearProgram, LpSnapshot, pdhg_run
from .metrics import IncumbentTrace, primal_gap, primal_integral, shifted_geomean
from .model import ProblemInstance, build_instance, load, normalize, parse_mps, read_mps, validate_solution
from .orchestrator import SolveConfig, SolveReport, solve
from .pool import SolutionPool

__version__ = "0.1.0"

__all__ = [
    "IncumbentTrace", "LinearProgram", "LpSnapshot", "ProblemInstance", "SolutionPool", "SolveConfig",
    "SolveReport", "build_instance", "load", "normalize", "parse_mps", "pdhg_run", "primal_gap",
    "primal_integral", "read_mps", "shifted_geomean", "solve", "validate_solution",
]
