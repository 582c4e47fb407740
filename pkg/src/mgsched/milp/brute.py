"""Exhaustive enumeration oracle for tiny MILPs."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from ..errors import TooManyIntegersError
from .lp import LpEngine
from .problem import MilpProblem, MilpSolution


def brute_force(p: MilpProblem, max_binaries: int = 20) -> MilpSolution:
    """Enumerate every integer assignment and solve the continuous rest as an LP.

    Ties keep the first assignment in lexicographic order.
    """
    ints = p.integer_indices
    if len(ints) > max_binaries:
        raise TooManyIntegersError(f"{len(ints)} integer variables exceed the limit of {max_binaries}")
    start = time.perf_counter()
    engine = LpEngine(p)
    lb, ub = engine.lb, engine.ub
    ranges = [range(int(math.ceil(lb[j] - 1e-9)), int(math.floor(ub[j] + 1e-9)) + 1) for j in ints]

    # Interval bounds over the continuous box let provably infeasible or dominated
    # assignments skip their LP; both tests are conservative, so the result is unchanged.
    cont = np.setdiff1d(np.arange(p.n_vars), ints)
    a_ub, a_eq = engine.a_ub.toarray(), engine.a_eq.toarray()
    c = engine.c

    def box_min(coef):
        with np.errstate(invalid="ignore"):
            lo, hi = coef * lb[cont], coef * ub[cont]
        return np.where(coef == 0, 0.0, np.minimum(lo, hi)).sum(axis=-1)

    ub_min = box_min(a_ub[:, cont])
    eq_min, eq_max = box_min(a_eq[:, cont]), -box_min(-a_eq[:, cont])
    obj_min = float(box_min(c[cont])) + p.offset
    tol_ub = 1e-7 * (1 + np.abs(engine.b_ub))
    tol_eq = 1e-7 * (1 + np.abs(engine.b_eq))

    best_obj, best_x, count = math.inf, None, 0
    unbounded = False
    for combo in itertools.product(*ranges):
        count += 1
        y = np.asarray(combo, dtype=float)
        if np.any(a_ub[:, ints] @ y + ub_min > engine.b_ub + tol_ub):
            continue
        eq_int = a_eq[:, ints] @ y
        if np.any(eq_int + eq_min > engine.b_eq + tol_eq) or np.any(eq_int + eq_max < engine.b_eq - tol_eq):
            continue
        if c[ints] @ y + obj_min >= best_obj + 1e-9 * (1 + abs(best_obj)):
            continue
        flb, fub = lb.copy(), ub.copy()
        flb[ints] = combo
        fub[ints] = combo
        sol = engine.solve(flb, fub)
        if sol.status == "unbounded":
            unbounded = True
            break
        if sol.status == "optimal" and sol.objective < best_obj:
            best_obj, best_x = sol.objective, sol.x
    elapsed = time.perf_counter() - start
    if unbounded:
        return MilpSolution(MilpSolution.UNBOUNDED, -math.inf, None, -math.inf, count, elapsed)
    if best_x is None:
        return MilpSolution(MilpSolution.INFEASIBLE, math.nan, None, math.inf, count, elapsed)
    return MilpSolution(MilpSolution.OPTIMAL, best_obj, np.asarray(best_x), best_obj, count, elapsed)
