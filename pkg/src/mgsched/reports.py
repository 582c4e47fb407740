"""Batch commands behind the CLI and the files they emit.

Every CSV has a header row with unit-suffixed column names and a fixed
column order.  Numbers are written with ``repr`` so files round-trip exactly
and reruns in deterministic modes are byte-identical; wall-clock times are
kept out of the schedule and cost files and appear only in logs and in the
``time_s`` columns of sweep and comparison tables.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ParameterError, ScenarioError
from .hia import HiaResult, PsoParams, pso_optimize
from .milp import MilpSolution, SolveOptions, write_mps
from .model import Schedule, ValidationReport, audit_schedule, build_ccp_model, model_cost, validate_schedule
from .solve import (BIGM_MAX_HORIZON, EXIT_INFEASIBLE, EXIT_OK, METHODS, DstResult, build_problem,
                    exit_code_for, solve_dst)

SWEEP_AXES = ("alpha", "ess_power", "ess_capacity", "sigma_l", "step_q")
DEFAULT_SWEEP_VALUES = {
    "alpha": [round(0.5 + 0.05 * i, 2) for i in range(11)],
    "ess_power": [0.5, 0.75, 1.0, 1.25, 1.5],
    "ess_capacity": [0.5, 0.75, 1.0, 1.25, 1.5],
    "sigma_l": [0.05, 0.10, 0.15, 0.20],
    "step_q": [1.0, 2.0, 3.0, 4.0, 6.0, 8.0],
}
COMPARE_ALPHAS = (0.90, 0.95, 1.00)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x + 0.0)  # + 0.0 folds -0.0


def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return path


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    return path


def _out_dir(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# schedule files --------------------------------------------------------------

def _unit_labels(units) -> list:
    return [u.name or f"MT{i + 1}" for i, u in enumerate(units)]


def schedule_header(units) -> list:
    cols = ["t"]
    for name in _unit_labels(units):
        cols += [f"u_{name}", f"s_{name}", f"p_mt_{name}_kw", f"r_mt_{name}_kw"]
    return cols + ["p_ch_kw", "p_dc_kw", "soc_start_kwh", "soc_end_kwh", "r_ess_kw", "p_cnload_kw",
                   "total_reserve_kw"]


def write_schedule_csv(sched: Schedule, units, path) -> Path:
    rows = []
    for t in range(sched.horizon):
        row = [t]
        for n in range(len(units)):
            row += [int(round(sched.u[n, t])), int(round(sched.s[n, t])), sched.p_mt[n, t], sched.r_mt[n, t]]
        row += [sched.p_ch[t], sched.p_dc[t], sched.soc[t], sched.soc[t + 1], sched.r_ess[t],
                sched.p_cnload[t], sched.total_reserve[t]]
        rows.append(row)
    return _write_csv(Path(path), schedule_header(units), rows)


def read_schedule_csv(path, scenario) -> Schedule:
    """Load a schedule written by :func:`write_schedule_csv` and check it fits ``scenario``."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    header = schedule_header(scenario.units)
    T = scenario.horizon
    if not rows:
        raise ScenarioError(str(path), "schedule file has no rows")
    missing = [c for c in header if c not in rows[0]]
    if missing:
        raise ScenarioError(str(path), f"schedule columns do not match the scenario units; missing {missing}")
    if len(rows) != T:
        raise ScenarioError(str(path), f"schedule has {len(rows)} periods, scenario horizon is {T}")

    def col(name):
        try:
            return np.array([float(r[name]) for r in rows])
        except ValueError as exc:
            raise ScenarioError(f"{path}:{name}", str(exc)) from exc

    labels = _unit_labels(scenario.units)
    grid = lambda prefix, suffix="": np.vstack([col(f"{prefix}{n}{suffix}") for n in labels])  # noqa: E731
    sched = Schedule(
        u=grid("u_"), s=grid("s_"), p_mt=grid("p_mt_", "_kw"), r_mt=grid("r_mt_", "_kw"),
        p_ch=col("p_ch_kw"), p_dc=col("p_dc_kw"),
        soc=np.append(col("soc_start_kwh"), col("soc_end_kwh")[-1]),
        r_ess=col("r_ess_kw"), p_cnload=col("p_cnload_kw"),
    )
    return sched


def cost_document(sched: Schedule, method: str, status: str, scenario, extra: Optional[dict] = None) -> dict:
    doc = {
        "scenario": scenario.name,
        "method": method,
        "alpha": scenario.alpha,
        "step_q_kw": scenario.step_q,
        "status": status,
        "total_cost_usd": sched.total_cost,
        "breakdown_usd": sched.cost.as_dict(),
        "total_reserve_kw": [float(v) for v in sched.total_reserve],
    }
    doc.update(extra or {})
    return doc


# solve ----------------------------------------------------------------------

@dataclass
class SolveOutcome:
    method: str
    status: str
    exit_code: int
    files: list
    schedule: Optional[Schedule] = None
    cost: float = math.nan
    wall_time: float = 0.0
    message: str = ""
    result: object = field(default=None, repr=False)


def _log(path: Path, lines: Sequence[str]) -> Path:
    path.write_text("\n".join(lines) + "\n")
    return path


def cmd_export_mps(scenario, out_dir, transform: str = "quantile", stem: str = "model") -> list:
    """Write the transformed MILP as MPS plus its name sidecar."""
    out = _out_dir(out_dir)
    _, problem = build_problem(scenario, transform)
    problem.name = f"MG{transform[:6].upper()}"
    mps, names = write_mps(problem, out / f"{stem}.mps")
    return [mps, names]


def cmd_solve(scenario, method: str, out_dir, seed: int = 0, options: Optional[SolveOptions] = None,
              pso: Optional[PsoParams] = None) -> SolveOutcome:
    """Solve one scenario and write schedule.csv, cost.json and solver.log under ``out_dir``."""
    if method not in METHODS:
        raise ParameterError(f"unknown method {method!r}; expected one of {list(METHODS)}")
    out = _out_dir(out_dir)
    if method == "dst-bigm" and scenario.horizon > BIGM_MAX_HORIZON:
        files = cmd_export_mps(scenario, out, "bigm")
        msg = (f"dst-bigm is limited to horizons of at most {BIGM_MAX_HORIZON} periods in-process "
               f"(this scenario has {scenario.horizon}); wrote {files[0].name} for an external solver")
        files.append(_log(out / "solver.log", [f"method: {method}", f"notice: {msg}"]))
        return SolveOutcome(method, "exported", EXIT_OK, files, message=msg)

    if method == "hia":
        params = pso or PsoParams(seed=seed)
        res: HiaResult = pso_optimize(scenario, params)
        sched = res.schedule
        status = "feasible" if res.feasible else "infeasible"
        files = [write_schedule_csv(sched, scenario.units, out / "schedule.csv"),
                 _write_json(out / "cost.json", cost_document(sched, method, status, scenario, {
                     "seed": params.seed, "penalized_cost_usd": res.penalized_cost,
                     "violations": res.violations})),
                 res.write_trace(out / "trace.csv")]
        files.append(_log(out / "solver.log", [
            f"method: {method}", f"scenario: {scenario.name}", f"alpha: {scenario.alpha}",
            f"seed: {params.seed}", f"population: {params.population}", f"iterations: {params.iterations}",
            f"n_mcs: {params.n_mcs}", f"status: {status}", f"cost_usd: {res.cost!r}",
            f"penalized_cost_usd: {res.penalized_cost!r}", f"wall_time_s: {res.wall_time:.3f}",
        ]))
        code = EXIT_OK if res.feasible else EXIT_INFEASIBLE
        msg = "" if res.feasible else f"no Monte Carlo feasible particle found; violations {res.violations}"
        return SolveOutcome(method, status, code, files, sched, res.cost, res.wall_time, msg, res)

    res: DstResult = solve_dst(scenario, method.split("-", 1)[1], options)
    sol = res.solution
    lines = [f"method: {method}", f"scenario: {scenario.name}", f"alpha: {scenario.alpha}",
             f"step_q_kw: {scenario.step_q}", f"variables: {res.problem.n_vars}",
             f"integers: {len(res.problem.integer_indices)}", f"constraints: {len(res.problem.constraints)}",
             f"status: {sol.status}", f"objective_usd: {sol.objective!r}", f"bound_usd: {sol.bound!r}",
             f"nodes: {sol.nodes}", f"build_time_s: {res.build_time:.3f}", f"solve_time_s: {res.solve_time:.3f}"]
    files = []
    if res.schedule is not None:
        if res.audit is not None:
            worst = max(res.audit.residuals.items(), key=lambda kv: kv[1])
            lines.append(f"audit_max_residual: {worst[0]} {worst[1]:.3e}")
        files += [write_schedule_csv(res.schedule, scenario.units, out / "schedule.csv"),
                  _write_json(out / "cost.json", cost_document(res.schedule, method, sol.status, scenario, {
                      "objective_usd": sol.objective, "bound_usd": sol.bound, "nodes": sol.nodes}))]
    msg = ""
    if sol.status != MilpSolution.OPTIMAL:
        msg = f"solver finished with status {sol.status}"
        if sol.status == MilpSolution.INFEASIBLE:
            cap = scenario.system_capacity
            peak = max(pd.el_expect for pd in res.model.periods)
            msg += f" (peak expected equivalent load {peak:.2f} kW, installed capacity {cap:.2f} kW)"
        lines.append(f"diagnostic: {msg}")
    files.append(_log(out / "solver.log", lines))
    return SolveOutcome(method, sol.status, exit_code_for(sol.status), files, res.schedule, res.cost,
                        res.wall_time, msg, res)


# sweep ----------------------------------------------------------------------

def apply_axis(scenario, axis: str, value: float):
    if axis == "alpha":
        return scenario.with_alpha(value)
    if axis == "ess_power":
        return scenario.with_ess_power_scale(value)
    if axis == "ess_capacity":
        return scenario.with_ess_capacity_scale(value)
    if axis == "sigma_l":
        return scenario.with_load_sigma_fraction(value)
    if axis == "step_q":
        return scenario.with_step(value)
    raise ParameterError(f"unknown sweep axis {axis!r}; expected one of {list(SWEEP_AXES)}")


@dataclass
class SweepRow:
    axis_value: float
    cost: float
    total_reserve: float
    time_s: float
    status: str
    flagged: bool = False
    message: str = ""


@dataclass
class SweepReport:
    axis: str
    rows: list

    @property
    def values(self) -> list:
        return [r.axis_value for r in self.rows]

    @property
    def costs(self) -> list:
        return [r.cost for r in self.rows]

    @property
    def all_optimal(self) -> bool:
        return not any(r.flagged for r in self.rows)

    def write_csv(self, path) -> Path:
        return _write_csv(Path(path), ["axis_value", "cost_usd", "total_reserve_kw", "time_s", "status", "flagged"],
                          [[r.axis_value, r.cost, r.total_reserve, round(r.time_s, 6), r.status, r.flagged]
                           for r in self.rows])


def _sweep_point(args) -> SweepRow:
    scenario, axis, value, transform, options = args
    try:
        sc = apply_axis(scenario, axis, value)
        res = solve_dst(sc, transform, options)
    except (ParameterError, ScenarioError) as exc:
        return SweepRow(value, math.nan, math.nan, 0.0, "invalid", True, str(exc))
    if res.status != MilpSolution.OPTIMAL:
        cost = res.cost if res.schedule is not None else math.nan
        reserve = float(res.schedule.total_reserve.sum()) if res.schedule is not None else math.nan
        return SweepRow(value, cost, reserve, res.wall_time, res.status, True)
    return SweepRow(value, res.cost, float(res.schedule.total_reserve.sum()), res.wall_time, res.status)


def _run_pool(fn: Callable, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))  # map keeps input order


def cmd_sweep(scenario, axis: str, values: Optional[Sequence[float]] = None, out_dir=None, jobs: int = 1,
              transform: str = "quantile", options: Optional[SolveOptions] = None) -> SweepReport:
    """One independent DST solve per axis value; infeasible or invalid points are flagged, not fatal."""
    if axis not in SWEEP_AXES:
        raise ParameterError(f"unknown sweep axis {axis!r}; expected one of {list(SWEEP_AXES)}")
    values = list(DEFAULT_SWEEP_VALUES[axis] if values is None else values)
    if not values:
        raise ParameterError("sweep needs at least one value")
    rows = _run_pool(_sweep_point, [(scenario, axis, float(v), transform, options) for v in values], jobs)
    report = SweepReport(axis, rows)
    if out_dir is not None:
        report.write_csv(_out_dir(out_dir) / f"sweep_{axis}.csv")
    return report


# compare --------------------------------------------------------------------

@dataclass
class CompareRow:
    alpha: float
    method: str
    mean_cost: float
    std_cost: float
    mean_time: float
    n_runs: int
    n_feasible: int


@dataclass
class CompareReport:
    rows: list
    seeds: list

    def row(self, alpha: float, method: str) -> CompareRow:
        return next(r for r in self.rows if r.method == method and abs(r.alpha - alpha) < 1e-12)

    @property
    def dst_not_worse(self) -> dict:
        out = {}
        for a in sorted({r.alpha for r in self.rows}):
            out[a] = self.row(a, "dst-quantile").mean_cost <= self.row(a, "hia").mean_cost + 1e-6
        return out

    def write_csv(self, path) -> Path:
        return _write_csv(Path(path), ["alpha", "method", "mean_cost_usd", "std_cost_usd", "mean_time_s", "n_runs",
                                       "n_feasible"],
                          [[r.alpha, r.method, r.mean_cost, r.std_cost, round(r.mean_time, 6), r.n_runs, r.n_feasible]
                           for r in self.rows])


def _compare_task(args):
    scenario, method, seed, pso = args
    if method == "hia":
        res = pso_optimize(scenario, replace(pso or PsoParams(), seed=seed))
        return res.cost, res.wall_time, res.feasible
    res = solve_dst(scenario, "quantile")
    return res.cost, res.wall_time, res.status == MilpSolution.OPTIMAL


def _stats(values) -> tuple:
    """Mean and sample standard deviation over the finite entries (NaN when there are none)."""
    values = [v for v in values if math.isfinite(v)]
    if not values:
        return math.nan, math.nan
    return statistics.fmean(values), (statistics.stdev(values) if len(values) > 1 else 0.0)


def cmd_compare(scenario, seeds: Sequence[int], out_dir=None, jobs: int = 1, alphas=COMPARE_ALPHAS,
                pso: Optional[PsoParams] = None) -> CompareReport:
    """DST against the PSO baseline at several confidence levels, one run per seed for each method."""
    seeds = list(seeds)
    if not seeds:
        raise ParameterError("compare needs at least one seed")
    tasks = [(scenario.with_alpha(a), m, s, pso) for a in alphas for m in ("dst-quantile", "hia") for s in seeds]
    results = _run_pool(_compare_task, tasks, jobs)
    rows = []
    it = iter(results)
    for a in alphas:
        for m in ("dst-quantile", "hia"):
            batch = [next(it) for _ in seeds]
            # Cost statistics cover the feasible runs; n_feasible says how many there were.
            mean_c, std_c = _stats([b[0] if b[2] else math.nan for b in batch])
            rows.append(CompareRow(a, m, mean_c, std_c, statistics.fmean(b[1] for b in batch), len(batch),
                                   sum(bool(b[2]) for b in batch)))
    report = CompareReport(rows, seeds)
    if out_dir is not None:
        out = _out_dir(out_dir)
        report.write_csv(out / "compare.csv")
        _write_json(out / "compare.json", {
            "seeds": seeds,
            "dst_cost_not_above_hia_mean": {f"{a:.2f}": ok for a, ok in report.dst_not_worse.items()},
        })
    return report


# validate -------------------------------------------------------------------

def cmd_validate(scenario, schedule_file, n_samples: int = 100_000, seed: int = 0, out_dir=None) -> ValidationReport:
    """Empirical reserve adequacy of a stored schedule under the scenario's true laws."""
    sched = read_schedule_csv(schedule_file, scenario)
    model = build_ccp_model(scenario)
    sched.cost = model_cost(model, sched)
    report = validate_schedule(sched, scenario, n_samples, seed, [pd.el_expect for pd in model.periods])
    if out_dir is not None:
        out = _out_dir(out_dir)
        _write_csv(out / "adequacy.csv", ["t", "total_reserve_kw", "adequacy", "mean_shortfall_kw",
                                          "max_shortfall_kw"],
                   [[t, sched.total_reserve[t], report.adequacy[t], report.mean_shortfall[t],
                     report.max_shortfall[t]] for t in range(sched.horizon)])
        audit = audit_schedule(sched, model)
        _write_json(out / "validation.json", {**report.summary(), "audit_residuals": audit.residuals,
                                              "total_cost_usd": sched.total_cost})
    return report
