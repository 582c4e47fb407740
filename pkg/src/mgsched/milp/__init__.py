"""Mixed-integer linear programming: model container, solvers, export."""

from .bnb import SolveOptions, branch_and_bound
from .brute import brute_force
from .lp import LPSolution, LpEngine, solve_lp_relaxation
from .mps import export_mps, name_table, read_mps, write_mps
from .problem import EQ, GE, LE, MilpProblem, MilpSolution

__all__ = [
    "EQ", "GE", "LE", "LPSolution", "LpEngine", "MilpProblem", "MilpSolution", "SolveOptions",
    "branch_and_bound", "brute_force", "export_mps", "name_table", "read_mps", "solve_lp_relaxation",
    "write_mps",
]
