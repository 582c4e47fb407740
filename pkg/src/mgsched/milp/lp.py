"""Continuous relaxation solves.

The simplex work is delegated to HiGHS through :func:`scipy.optimize.linprog`;
this module owns the bound handling, status mapping and residual checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from ..errors import DegenerateInstanceError
from .problem import MilpProblem

RESIDUAL_TOL = 1e-7

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-9,
    "dual_feasibility_tolerance": 1e-9,
    "presolve": True,
}


@dataclass
class LPSolution:
    status: str
    objective: float = math.nan
    x: Optional[np.ndarray] = None
    residual: float = 0.0


class LpEngine:
    """Caches the constraint matrices of one problem for repeated bound changes."""

    def __init__(self, problem: MilpProblem):
        self.problem = problem
        self.c = problem.cost_vector()
        self.a_ub, self.b_ub, self.a_eq, self.b_eq = problem.matrices()
        self.lb, self.ub = problem.bounds()

    def solve(self, lb: Optional[np.ndarray] = None, ub: Optional[np.ndarray] = None) -> LPSolution:
        lb = self.lb if lb is None else lb
        ub = self.ub if ub is None else ub
        p = self.problem
        if np.any(lb > ub):
            return LPSolution("infeasible")
        if p.n_vars == 0:
            if _empty_rows_feasible(p):
                return LPSolution("optimal", float(p.offset), np.zeros(0))
            return LPSolution("infeasible")

        if np.array_equal(lb, ub):
            # Every column fixed: a feasibility check replaces the LP.
            if self.residual(lb) <= RESIDUAL_TOL:
                return LPSolution("optimal", float(self.c @ lb + p.offset), lb.copy(), self.residual(lb))
            return LPSolution("infeasible")

        kwargs = {}
        if self.a_ub.shape[0]:
            kwargs.update(A_ub=self.a_ub, b_ub=self.b_ub)
        if self.a_eq.shape[0]:
            kwargs.update(A_eq=self.a_eq, b_eq=self.b_eq)
        bounds = np.column_stack([np.where(np.isfinite(lb), lb, -np.inf), np.where(np.isfinite(ub), ub, np.inf)])
        res = linprog(self.c, bounds=bounds, method="highs", options=_HIGHS_OPTIONS, **kwargs)

        if res.status == 2:
            return LPSolution("infeasible")
        if res.status == 3:
            return LPSolution("unbounded")
        if res.status != 0:
            raise DegenerateInstanceError(
                f"LP engine stopped with status {res.status}: {res.message}",
                {"status": res.status, "message": res.message, "n_vars": p.n_vars,
                 "n_rows": len(p.constraints)},
            )
        x = np.clip(res.x, lb, ub)
        residual = self.residual(x)
        if residual > 10 * RESIDUAL_TOL:
            raise DegenerateInstanceError(
                f"LP residual {residual:.3g} exceeds tolerance",
                {"residual": residual, "n_vars": p.n_vars, "n_rows": len(p.constraints)},
            )
        return LPSolution("optimal", float(self.c @ x + p.offset), x, residual)

    def residual(self, x: np.ndarray) -> float:
        worst = 0.0
        if self.a_ub.shape[0]:
            worst = max(worst, float(np.max(self.a_ub @ x - self.b_ub, initial=0.0)))
        if self.a_eq.shape[0]:
            worst = max(worst, float(np.max(np.abs(self.a_eq @ x - self.b_eq), initial=0.0)))
        return worst


def _empty_rows_feasible(p: MilpProblem) -> bool:
    for con in p.constraints:
        if con.sense == "<=" and con.rhs < -RESIDUAL_TOL:
            return False
        if con.sense == ">=" and con.rhs > RESIDUAL_TOL:
            return False
        if con.sense == "==" and abs(con.rhs) > RESIDUAL_TOL:
            return False
    return True


def solve_lp_relaxation(p: MilpProblem) -> LPSolution:
    """Optimum of ``p`` with integrality dropped."""
    return LpEngine(p).solve()
