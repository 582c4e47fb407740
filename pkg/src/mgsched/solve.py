"""End-to-end solve pipeline: scenario -> sequences -> MILP -> schedule."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .errors import ParameterError
from .milp import MilpProblem, MilpSolution, SolveOptions, branch_and_bound
from .model import AuditReport, CcpModel, Schedule, audit_schedule, build_ccp_model, schedule_from_solution
from .model import transform_bigM, transform_quantile

METHODS = ("dst-quantile", "dst-bigm", "hia")
TRANSFORMS = {"quantile": transform_quantile, "bigm": transform_bigM}
# Beyond this horizon the indicator encoding carries thousands of binaries,
# more than the embedded branch-and-bound handles in reasonable time.
BIGM_MAX_HORIZON = 6

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_LIMIT = 0, 2, 3, 4


def exit_code_for(status: str) -> int:
    if status == MilpSolution.OPTIMAL:
        return EXIT_OK
    if status in (MilpSolution.INFEASIBLE, MilpSolution.UNBOUNDED):
        return EXIT_INFEASIBLE
    return EXIT_LIMIT


@dataclass
class DstResult:
    method: str
    model: CcpModel
    problem: MilpProblem
    solution: MilpSolution
    schedule: Optional[Schedule]
    audit: Optional[AuditReport]
    build_time: float
    solve_time: float

    @property
    def status(self) -> str:
        return self.solution.status

    @property
    def wall_time(self) -> float:
        return self.build_time + self.solve_time

    @property
    def cost(self) -> float:
        return self.schedule.total_cost if self.schedule is not None else float("nan")


def build_problem(scenario, transform: str = "quantile"):
    """Model and transformed MILP for one scenario."""
    if transform not in TRANSFORMS:
        raise ParameterError(f"unknown transform {transform!r}; expected one of {sorted(TRANSFORMS)}")
    model = build_ccp_model(scenario)
    return model, TRANSFORMS[transform](model)


def solve_dst(scenario, transform: str = "quantile", options: Optional[SolveOptions] = None) -> DstResult:
    """Discretize, transform and solve; the schedule is decoded only when a point was found."""
    start = time.perf_counter()
    model, problem = build_problem(scenario, transform)
    built = time.perf_counter()
    sol = branch_and_bound(problem, options or SolveOptions())
    done = time.perf_counter()
    sched = audit = None
    if sol.x is not None:
        sched = schedule_from_solution(model, problem, sol.x)
        sched.meta = {"method": f"dst-{transform}", "status": sol.status}
        audit = audit_schedule(sched, model)
    return DstResult(f"dst-{transform}", model, problem, sol, sched, audit, built - start, done - built)
