"""LP-based branch-and-bound.

Best-bound node selection, most-fractional branching with ties broken by
the lowest variable index, and an integer-fixing polish step whenever a
relaxation lands on an integral point.  Single-threaded and deterministic.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lp import LpEngine
from .problem import MilpProblem, MilpSolution

log = logging.getLogger(__name__)

OPTIMALITY_GAP = 1e-6


@dataclass
class SolveOptions:
    int_tol: float = 1e-6
    rel_gap: float = OPTIMALITY_GAP
    node_limit: int = 200_000
    time_limit: Optional[float] = None
    rounding_heuristic: bool = True


def _gap_tol(incumbent: float, rel_gap: float) -> float:
    return rel_gap * max(1.0, abs(incumbent))


class _Search:
    def __init__(self, p: MilpProblem, opts: SolveOptions):
        self.p = p
        self.opts = opts
        self.engine = LpEngine(p)
        self.ints = np.array(p.integer_indices, dtype=np.int64)
        self.inc_obj = math.inf
        self.inc_x = None
        self.nodes = 0

    def fractional(self, x):
        if self.ints.size == 0:
            return None
        vals = x[self.ints]
        frac = np.abs(vals - np.round(vals))
        mask = frac > self.opts.int_tol
        if not mask.any():
            return None
        # Distance of the fractional part from 1/2; argmin picks the lowest index on ties.
        score = np.where(mask, np.abs((vals - np.floor(vals)) - 0.5), np.inf)
        return int(self.ints[int(np.argmin(score))])

    def solve_node(self, lb, ub):
        self.nodes += 1
        return self.engine.solve(lb, ub)

    def offer(self, x, obj, lb, ub):
        """Try ``x`` (integral within tolerance) as a new incumbent after polishing."""
        flb, fub = lb.copy(), ub.copy()
        r = np.round(x[self.ints])
        flb[self.ints] = r
        fub[self.ints] = r
        polished = self.engine.solve(flb, fub)
        if polished.status == "optimal":
            x, obj = polished.x, polished.objective
        if obj < self.inc_obj:
            self.inc_obj, self.inc_x = obj, x
            log.debug("incumbent %.9g after %d nodes", obj, self.nodes)

    def round_heuristic(self, x, lb, ub):
        vals = x[self.ints]
        for r in (np.round(vals), np.ceil(vals - self.opts.int_tol)):
            flb, fub = lb.copy(), ub.copy()
            r = np.clip(r, lb[self.ints], ub[self.ints])
            flb[self.ints] = r
            fub[self.ints] = r
            sol = self.engine.solve(flb, fub)
            if sol.status == "optimal" and sol.objective < self.inc_obj:
                self.inc_obj, self.inc_x = sol.objective, sol.x


def branch_and_bound(p: MilpProblem, opts: Optional[SolveOptions] = None) -> MilpSolution:
    opts = opts or SolveOptions()
    start = time.perf_counter()
    search = _Search(p, opts)
    lb0, ub0 = search.engine.lb.copy(), search.engine.ub.copy()
    # Integer bounds are rounded inward once up front.
    if search.ints.size:
        lb0[search.ints] = np.ceil(lb0[search.ints] - opts.int_tol)
        ub0[search.ints] = np.floor(ub0[search.ints] + opts.int_tol)

    def finish(status, bound):
        x = search.inc_x
        obj = search.inc_obj if x is not None else math.nan
        return MilpSolution(status, obj, x, bound, search.nodes, time.perf_counter() - start)

    root = search.solve_node(lb0, ub0)
    if root.status == "infeasible":
        return finish(MilpSolution.INFEASIBLE, math.inf)
    if root.status == "unbounded":
        return finish(MilpSolution.UNBOUNDED, -math.inf)

    # Open nodes keep only their integer bounds; continuous bounds never change.
    ints = search.ints
    heap = []
    counter = 0

    def full(ilb, iub):
        lb, ub = lb0.copy(), ub0.copy()
        lb[ints] = ilb
        ub[ints] = iub
        return lb, ub

    def consider(sol, lb, ub):
        nonlocal counter
        if sol.status != "optimal":
            return
        if sol.objective >= search.inc_obj - _gap_tol(search.inc_obj, opts.rel_gap):
            return
        j = search.fractional(sol.x)
        if j is None:
            search.offer(sol.x, sol.objective, lb, ub)
            return
        heapq.heappush(heap, (sol.objective, counter, lb[ints], ub[ints], j, float(sol.x[j])))
        counter += 1

    consider(root, lb0, ub0)
    if heap and opts.rounding_heuristic:
        search.round_heuristic(root.x, lb0, ub0)

    where = {int(j): k for k, j in enumerate(ints)}
    while heap:
        bound = heap[0][0]
        if bound >= search.inc_obj - _gap_tol(search.inc_obj, opts.rel_gap):
            break
        if search.nodes >= opts.node_limit:
            return finish(MilpSolution.NODE_LIMIT, bound)
        if opts.time_limit is not None and time.perf_counter() - start > opts.time_limit:
            return finish(MilpSolution.TIME_LIMIT, bound)
        bound, _, ilb, iub, j, v = heapq.heappop(heap)
        k = where[j]
        down = iub.copy()
        down[k] = math.floor(v)
        lb, ub = full(ilb, down)
        consider(search.solve_node(lb, ub), lb, ub)
        up = ilb.copy()
        up[k] = math.ceil(v)
        lb, ub = full(up, iub)
        consider(search.solve_node(lb, ub), lb, ub)

    if search.inc_x is None:
        return finish(MilpSolution.INFEASIBLE, math.inf)
    open_bound = heap[0][0] if heap else search.inc_obj
    bound = min(open_bound, search.inc_obj)
    gap = search.inc_obj - bound
    status = MilpSolution.OPTIMAL if gap <= _gap_tol(search.inc_obj, OPTIMALITY_GAP) else MilpSolution.GAP_LIMIT
    return finish(status, bound)
