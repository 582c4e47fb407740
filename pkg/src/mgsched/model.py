"""Chance-constrained day-ahead scheduling model and its MILP transforms.

The deterministic part (cost, balance, unit limits, storage dynamics and
reserve caps) is built once as a :class:`MilpProblem`.  Each period also
carries one chance constraint on the total spinning reserve, which is made
deterministic in one of two equivalent ways:

* :func:`transform_bigM` adds one 0-1 indicator per point of the
  equivalent-load sequence plus the big-M sandwich rows.
* :func:`transform_quantile` collapses the indicator staircase to a single
  reserve row at the discrete alpha-quantile.
"""

from __future__ import annotations

import copy
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError, SampleSizeWarning, StepMismatchError
from .milp import EQ, GE, LE, MilpProblem
from .seqops import ProbSeq, discretize, equivalent_load_seq, expectation, quantile_index
from .uncertainty import PeriodUncertainty, sample_equivalent_loads

DT = 1.0  # h


@dataclass(frozen=True)
class MtUnit:
    p_min: float
    p_max: float
    fixed_cost: float
    fuel_slope: float
    startup_cost: float
    reserve_price: float
    name: str = ""

    def __post_init__(self):
        if not 0 <= self.p_min <= self.p_max:
            raise ParameterError(f"unit {self.name!r}: need 0 <= p_min <= p_max")
        for attr in ("fixed_cost", "fuel_slope", "startup_cost", "reserve_price"):
            if getattr(self, attr) < 0:
                raise ParameterError(f"unit {self.name!r}: {attr} must be nonnegative")


@dataclass(frozen=True)
class EssParams:
    c_min: float
    c_max: float
    c_init: float
    p_ch_max: float
    p_dc_max: float
    eta_ch: float
    eta_dc: float
    charge_price: float
    discharge_price: float

    def __post_init__(self):
        if not 0 <= self.c_min <= self.c_max:
            raise ParameterError("storage needs 0 <= c_min <= c_max")
        if not self.c_min <= self.c_init <= self.c_max:
            raise ParameterError(f"initial energy {self.c_init} outside [{self.c_min}, {self.c_max}]")
        if not (self.p_ch_max > 0 and self.p_dc_max > 0):
            raise ParameterError("storage power ratings must be positive")
        if not (0 < self.eta_ch <= 1 and 0 < self.eta_dc <= 1):
            raise ParameterError("storage efficiencies must lie in (0, 1]")
        if self.charge_price < 0 or self.discharge_price < 0:
            raise ParameterError("storage prices must be nonnegative")


@dataclass(frozen=True)
class PeriodData:
    el_seq: ProbSeq
    el_expect: float
    cnload_max: float


@dataclass(frozen=True)
class ChanceConstraint:
    """Reserve adequacy requirement for one period, kept symbolic until transformed."""

    period: int
    el_seq: ProbSeq
    el_expect: float
    alpha: float


@dataclass
class CcpModel:
    horizon: int
    units: tuple
    ess: EssParams
    periods: tuple
    alpha: float
    step_q: float
    base: MilpProblem
    chance: tuple
    charge_is_cost: bool = False
    ess_exclusivity: bool = False
    cnload_price: float = 0.0

    @property
    def n_commitment(self) -> int:
        return sum(1 for v in self.base.variables if v.name.startswith("u["))

    @property
    def n_startup(self) -> int:
        return sum(1 for v in self.base.variables if v.name.startswith("s["))


def expected_equivalent_load(d: ProbSeq, a: ProbSeq, b: ProbSeq) -> float:
    """Mean load minus mean wind and PV output; may be negative."""
    if not (d.step_q == a.step_q == b.step_q):
        raise StepMismatchError("sequences must share one step size")
    return expectation(d) - expectation(a) - expectation(b)


def period_sequences(unc: PeriodUncertainty, q: float):
    """Discretized (wind, pv, load, equivalent load) sequences for one period."""
    wt, pv, load = unc.distributions()
    a, b, d = discretize(wt, q), discretize(pv, q), discretize(load, q)
    return a, b, d, equivalent_load_seq(d, a, b)


def ess_reserve_cap(soc: float, p_dc: float, e: EssParams) -> float:
    """Largest reserve the battery can hold given its energy and discharge headroom."""
    tol = 1e-9
    if not e.c_min - tol <= soc <= e.c_max + tol:
        raise ParameterError(f"state of charge {soc} outside [{e.c_min}, {e.c_max}]")
    if not -tol <= p_dc <= e.p_dc_max + tol:
        raise ParameterError(f"discharge {p_dc} outside [0, {e.p_dc_max}]")
    return max(0.0, min(e.eta_dc * (soc - e.c_min) / DT, e.p_dc_max - p_dc))


def _v(name, *idx):
    return f"{name}[{','.join(str(i) for i in idx)}]"


def build_ccp_model(scenario, sequences: Optional[Sequence] = None) -> CcpModel:
    """Assemble the deterministic rows and per-period chance records for ``scenario``.

    ``sequences`` may supply precomputed ``(el_seq, el_expect)`` pairs per
    period and skips discretization.
    """
    if not 0 < scenario.alpha <= 1:
        raise ParameterError(f"confidence level must lie in (0, 1], got {scenario.alpha}")
    T, q = scenario.horizon, scenario.step_q
    if sequences is None:
        sequences = []
        for unc in scenario.period_uncertainty():
            a, b, d, e = period_sequences(unc, q)
            sequences.append((e, expected_equivalent_load(d, a, b)))
    if len(sequences) != T:
        raise ParameterError(f"expected {T} period sequences, got {len(sequences)}")
    periods = tuple(PeriodData(e, float(mean), float(cap)) for (e, mean), cap in zip(sequences, scenario.cnload_max))

    units, ess = tuple(scenario.units), scenario.ess
    p = MilpProblem(name="mgsched")
    charge_sign = 1.0 if scenario.charge_is_cost else -1.0

    for t in range(T):
        for n, unit in enumerate(units):
            p.add_binary(_v("u", n, t), cost=unit.fixed_cost)
            p.add_var(_v("s", n, t), 0.0, 1.0, cost=unit.startup_cost)
            p.add_var(_v("p_mt", n, t), 0.0, unit.p_max, cost=unit.fuel_slope * DT)
            p.add_var(_v("r_mt", n, t), 0.0, unit.p_max, cost=unit.reserve_price)
        p.add_var(_v("p_ch", t), 0.0, ess.p_ch_max, cost=charge_sign * ess.charge_price * DT)
        p.add_var(_v("p_dc", t), 0.0, ess.p_dc_max, cost=ess.discharge_price * DT)
        p.add_var(_v("r_ess", t), 0.0, ess.p_dc_max)
        p.add_var(_v("p_cn", t), 0.0, periods[t].cnload_max, cost=scenario.cnload_price * DT)
        if scenario.ess_exclusivity:
            p.add_binary(_v("z_ch", t))
    for t in range(T + 1):
        if t in (0, T):
            p.add_var(_v("soc", t), ess.c_init, ess.c_init)
        else:
            p.add_var(_v("soc", t), ess.c_min, ess.c_max)

    ix = p.index
    for t in range(T):
        row = {ix(_v("p_mt", n, t)): 1.0 for n in range(len(units))}
        row.update({ix(_v("p_dc", t)): 1.0, ix(_v("p_ch", t)): -1.0, ix(_v("p_cn", t)): -1.0})
        p.add_constraint(row, EQ, periods[t].el_expect, _v("balance", t))
        for n, unit in enumerate(units):
            u, pm, r, s = ix(_v("u", n, t)), ix(_v("p_mt", n, t)), ix(_v("r_mt", n, t)), ix(_v("s", n, t))
            p.add_constraint({pm: 1.0, u: -unit.p_min}, GE, 0.0, _v("mt_min", n, t))
            p.add_constraint({pm: 1.0, u: -unit.p_max}, LE, 0.0, _v("mt_max", n, t))
            p.add_constraint({pm: 1.0, r: 1.0, u: -unit.p_max}, LE, 0.0, _v("mt_reserve", n, t))
            startup = {s: 1.0, u: -1.0}
            if t > 0:
                startup[ix(_v("u", n, t - 1))] = 1.0
            p.add_constraint(startup, GE, 0.0, _v("startup", n, t))
        soc0, soc1 = ix(_v("soc", t)), ix(_v("soc", t + 1))
        ch, dc, res = ix(_v("p_ch", t)), ix(_v("p_dc", t)), ix(_v("r_ess", t))
        p.add_constraint({soc1: 1.0, soc0: -1.0, ch: -ess.eta_ch * DT, dc: DT / ess.eta_dc}, EQ, 0.0, _v("soc_step", t))
        p.add_constraint({res: 1.0, soc0: -ess.eta_dc / DT}, LE, -ess.eta_dc * ess.c_min / DT, _v("ess_res_energy", t))
        p.add_constraint({res: 1.0, dc: 1.0}, LE, ess.p_dc_max, _v("ess_res_power", t))
        if scenario.ess_exclusivity:
            z = ix(_v("z_ch", t))
            p.add_constraint({ch: 1.0, z: -ess.p_ch_max}, LE, 0.0, _v("excl_ch", t))
            p.add_constraint({dc: 1.0, z: ess.p_dc_max}, LE, ess.p_dc_max, _v("excl_dc", t))

    chance = tuple(ChanceConstraint(t, pd.el_seq, pd.el_expect, scenario.alpha) for t, pd in enumerate(periods))
    return CcpModel(T, units, ess, periods, scenario.alpha, q, p, chance,
                    scenario.charge_is_cost, scenario.ess_exclusivity, scenario.cnload_price)


def _reserve_row(m: CcpModel, p: MilpProblem, t: int) -> dict:
    row = {p.index(_v("r_mt", n, t)): 1.0 for n in range(len(m.units))}
    row[p.index(_v("r_ess", t))] = 1.0
    return row


def big_m(m: CcpModel, t: int) -> float:
    cc = m.chance[t]
    return 2.0 * (cc.el_seq.n * m.step_q + abs(cc.el_expect) + sum(u.p_max for u in m.units) + m.ess.p_dc_max)


def transform_bigM(m: CcpModel) -> MilpProblem:
    """Indicator encoding: W[u,t] = 1 iff reserve covers the u-th equivalent-load level."""
    p = copy.deepcopy(m.base)
    q = m.step_q
    for cc in m.chance:
        t = cc.period
        tau = big_m(m, t)
        reserve = _reserve_row(m, p, t)
        coverage = {}
        for u in range(cc.el_seq.n + 1):
            w = p.add_binary(_v("W", u, t))
            level = u * q - cc.el_expect
            # (R + E - u q)/tau <= W <= 1 + (R + E - u q)/tau, scaled by tau.
            p.add_constraint({**reserve, w: -tau}, LE, level, _v("w_lo", u, t))
            p.add_constraint({**reserve, w: -tau}, GE, level - tau, _v("w_hi", u, t))
            if cc.el_seq.probs[u] > 0:
                coverage[w] = float(cc.el_seq.probs[u])
        p.add_constraint(coverage, GE, cc.alpha, _v("confidence", t))
    return p


def reserve_requirement(cc: ChanceConstraint, q: float) -> float:
    """Minimum total reserve (kW) meeting the chance constraint; may be <= 0."""
    return quantile_index(cc.el_seq, cc.alpha) * q - cc.el_expect


def transform_quantile(m: CcpModel) -> MilpProblem:
    """One reserve row per period at the discrete alpha-quantile of the equivalent load."""
    p = copy.deepcopy(m.base)
    for cc in m.chance:
        need = reserve_requirement(cc, m.step_q)
        if need > 0:
            p.add_constraint(_reserve_row(m, p, cc.period), GE, need, _v("reserve_req", cc.period))
    return p


@dataclass
class CostBreakdown:
    fuel: float
    startup: float
    reserve: float
    charge: float
    discharge: float
    cnload: float = 0.0

    @property
    def total(self) -> float:
        return self.fuel + self.startup + self.reserve + self.charge + self.discharge + self.cnload

    def as_dict(self) -> dict:
        return {"fuel": self.fuel, "startup": self.startup, "reserve": self.reserve,
                "charge": self.charge, "discharge": self.discharge, "cnload": self.cnload,
                "total": self.total}


@dataclass
class Schedule:
    """Dispatch over T periods for N units.

    Unit arrays have shape (N, T); ``soc`` has T + 1 entries (energy at the
    start of each period, then the end of the horizon).
    """

    u: np.ndarray
    s: np.ndarray
    p_mt: np.ndarray
    r_mt: np.ndarray
    p_ch: np.ndarray
    p_dc: np.ndarray
    soc: np.ndarray
    r_ess: np.ndarray
    p_cnload: np.ndarray
    cost: Optional[CostBreakdown] = None
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.p_ch.size

    @property
    def total_reserve(self) -> np.ndarray:
        return self.r_mt.sum(axis=0) + self.r_ess

    @property
    def total_cost(self) -> float:
        return self.cost.total


def schedule_cost(s: Schedule, units, ess: EssParams, charge_is_cost=False, cnload_price=0.0) -> CostBreakdown:
    fixed = np.array([u.fixed_cost for u in units])[:, None]
    slope = np.array([u.fuel_slope for u in units])[:, None]
    start = np.array([u.startup_cost for u in units])[:, None]
    rprice = np.array([u.reserve_price for u in units])[:, None]
    sign = 1.0 if charge_is_cost else -1.0
    return CostBreakdown(
        fuel=float((s.u * fixed + slope * s.p_mt * DT).sum()),
        startup=float((start * s.s).sum()),
        reserve=float((rprice * s.r_mt).sum()),
        charge=float(sign * ess.charge_price * DT * s.p_ch.sum()),
        discharge=float(ess.discharge_price * DT * s.p_dc.sum()),
        cnload=float(cnload_price * DT * s.p_cnload.sum()),
    )


def schedule_from_solution(m: CcpModel, p: MilpProblem, x) -> Schedule:
    x = np.asarray(x, dtype=float)
    T, N = m.horizon, len(m.units)

    def grid(name):
        return np.array([[x[p.index(_v(name, n, t))] for t in range(T)] for n in range(N)]).reshape(N, T)

    def vec(name, length=T):
        return np.array([x[p.index(_v(name, t))] for t in range(length)])

    u = np.round(grid("u"))
    prev = np.hstack([np.zeros((N, 1)), u[:, :-1]])
    s = np.maximum(u - prev, 0.0)
    sched = Schedule(
        u=u, s=s,
        p_mt=np.maximum(grid("p_mt"), 0.0), r_mt=np.maximum(grid("r_mt"), 0.0),
        p_ch=np.maximum(vec("p_ch"), 0.0), p_dc=np.maximum(vec("p_dc"), 0.0),
        soc=vec("soc", T + 1), r_ess=np.maximum(vec("r_ess"), 0.0), p_cnload=np.maximum(vec("p_cn"), 0.0),
    )
    sched.cost = model_cost(m, sched)
    return sched


def model_cost(m: CcpModel, s: Schedule) -> CostBreakdown:
    return schedule_cost(s, m.units, m.ess, m.charge_is_cost, m.cnload_price)


@dataclass
class AuditReport:
    """Largest violation of each deterministic constraint family (kW or kWh)."""

    residuals: dict

    def ok(self, tol: float = 1e-6) -> bool:
        return all(v <= tol for v in self.residuals.values())

    def failures(self, tol: float = 1e-6) -> dict:
        return {k: v for k, v in self.residuals.items() if v > tol}


def audit_schedule(s: Schedule, m: CcpModel) -> AuditReport:
    e = m.ess
    pmax = np.array([u.p_max for u in m.units])[:, None]
    pmin = np.array([u.p_min for u in m.units])[:, None]
    el = np.array([pd.el_expect for pd in m.periods])
    cap = np.array([pd.cnload_max for pd in m.periods])
    soc_next = s.soc[:-1] + (e.eta_ch * s.p_ch - s.p_dc / e.eta_dc) * DT
    prev = np.hstack([np.zeros((len(m.units), 1)), s.u[:, :-1]])
    res = {
        "balance": np.abs(s.p_mt.sum(axis=0) + s.p_dc - s.p_ch - el - s.p_cnload),
        "cnload_bounds": np.maximum(s.p_cnload - cap, 0.0),
        "mt_min": np.maximum(pmin * s.u - s.p_mt, 0.0),
        "mt_max": np.maximum(s.p_mt - pmax * s.u, 0.0),
        "mt_reserve": np.maximum(s.p_mt + s.r_mt - pmax * s.u, 0.0),
        "startup": np.maximum(s.u - prev - s.s, 0.0),
        "soc_step": np.abs(s.soc[1:] - soc_next),
        "soc_bounds": np.maximum(np.maximum(e.c_min - s.soc, s.soc - e.c_max), 0.0),
        "soc_terminal": np.abs(np.array([s.soc[0] - e.c_init, s.soc[-1] - e.c_init])),
        "rates": np.maximum(np.maximum(s.p_ch - e.p_ch_max, s.p_dc - e.p_dc_max), 0.0),
        "ess_reserve": np.maximum(s.r_ess - np.minimum(e.eta_dc * (s.soc[:-1] - e.c_min) / DT, e.p_dc_max - s.p_dc), 0.0),
        "nonnegative": np.maximum(-np.concatenate([s.p_mt.ravel(), s.r_mt.ravel(), s.p_ch, s.p_dc, s.r_ess, s.p_cnload]), 0.0),
    }
    return AuditReport({k: float(np.max(v, initial=0.0)) for k, v in res.items()})


@dataclass
class ValidationReport:
    alpha: float
    adequacy: np.ndarray
    mean_shortfall: np.ndarray
    max_shortfall: np.ndarray
    n_samples: int
    seed: int

    @property
    def min_adequacy(self) -> float:
        return float(self.adequacy.min())

    @property
    def periods_below_alpha(self) -> list:
        return [int(t) for t in np.flatnonzero(self.adequacy < self.alpha)]

    def summary(self) -> dict:
        return {"alpha": self.alpha, "n_samples": self.n_samples, "seed": self.seed,
                "min_adequacy": self.min_adequacy, "mean_adequacy": float(self.adequacy.mean()),
                "periods_below_alpha": self.periods_below_alpha,
                "mean_shortfall_kw": float(self.mean_shortfall.mean()),
                "max_shortfall_kw": float(self.max_shortfall.max())}


def reserve_adequacy(reserve, el_expect, samples) -> np.ndarray:
    """Per-period fraction of samples where reserve covers the deviation from the expected load."""
    dev = samples - np.asarray(el_expect)[:, None]
    return (np.asarray(reserve)[:, None] >= dev).mean(axis=1)


def validate_schedule(s: Schedule, scenario, n_samples: int = 100_000, seed: int = 0,
                      el_expect: Optional[Sequence[float]] = None) -> ValidationReport:
    """Monte Carlo check of the reserve chance constraint on the true (undiscretized) laws."""
    if n_samples < 1000:
        warnings.warn(f"{n_samples} samples are too few for a meaningful adequacy estimate", SampleSizeWarning,
                      stacklevel=2)
    if el_expect is None:
        el_expect = [pd.el_expect for pd in build_ccp_model(scenario).periods]
    el_expect = np.asarray(el_expect, dtype=float)
    if el_expect.size != s.horizon:
        raise ParameterError(f"schedule has {s.horizon} periods, scenario has {el_expect.size}")
    samples = sample_equivalent_loads(scenario.period_uncertainty(), n_samples, seed)
    reserve = s.total_reserve
    short = np.maximum(samples - el_expect[:, None] - reserve[:, None], 0.0)
    return ValidationReport(scenario.alpha, reserve_adequacy(reserve, el_expect, samples),
                            short.mean(axis=1), short.max(axis=1), n_samples, seed)


def expected_cost_check(m: CcpModel, p: MilpProblem, x) -> float:
    """Difference between the MILP objective and the schedule's recomputed cost."""
    return p.evaluate(x) - schedule_from_solution(m, p, x).total_cost
