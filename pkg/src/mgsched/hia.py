"""Particle swarm + Monte Carlo baseline for the same scheduling model.

Each particle encodes, per period, the output and reserve of every unit and
the battery charge/discharge powers.  Decoding rounds commitments, projects
the battery net output onto what the committed units cannot balance, repairs
the state-of-charge trajectory, moves committed outputs into the power
balance band where they have room, and scores the result with the schedule
cost plus penalties for balance violations, storage clamping and reserve
shortfalls.  Every evaluation verifies the chance constraint on a fresh Monte
Carlo sample of ``n_mcs`` realizations per period, which is what makes the
method expensive.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParameterError
from .model import DT, Schedule, build_ccp_model, model_cost, reserve_adequacy
from .uncertainty import sample_equivalent_loads

PENALTY = 1e4  # $ per kW (or kWh) of violation
FEASIBILITY_TOL = 1e-4


@dataclass(frozen=True)
class PsoParams:
    population: int = 20
    iterations: int = 150
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    seed: int = 0
    n_mcs: int = 500
    vmax_frac: float = 0.2

    def __post_init__(self):
        if self.population < 2:
            raise ParameterError("population must be at least 2")
        if self.iterations < 1:
            raise ParameterError("iterations must be at least 1")
        if self.n_mcs < 1:
            raise ParameterError("n_mcs must be at least 1")


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_cost: float


@dataclass
class TraceRow:
    iteration: int
    best_cost: float
    feasible: bool


@dataclass
class HiaResult:
    schedule: Schedule
    cost: float
    penalized_cost: float
    feasible: bool
    trace: list
    wall_time: float
    violations: dict = field(default_factory=dict)
    swarm: list = field(default_factory=list, repr=False)

    def write_trace(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "best_cost_usd", "feasible_flag"])
            for row in self.trace:
                w.writerow([row.iteration, f"{row.best_cost:.6f}", int(row.feasible)])
        return path


def mcs_required_reserve(samples: np.ndarray, el_expect, alpha: float) -> np.ndarray:
    """Smallest per-period reserve covering at least a fraction ``alpha`` of the samples."""
    dev = np.sort(samples - np.asarray(el_expect)[:, None], axis=1)
    k = int(math.ceil(alpha * dev.shape[1] - 1e-12))
    return dev[:, max(k, 1) - 1]


def mcs_check(reserve_total, scenario, n_mcs: int, seed: int, el_expect=None) -> np.ndarray:
    """Per-period fraction of sampled realizations whose deviation the reserve covers."""
    if n_mcs < 1:
        raise ParameterError("n_mcs must be at least 1")
    if el_expect is None:
        el_expect = [pd.el_expect for pd in build_ccp_model(scenario).periods]
    samples = sample_equivalent_loads(scenario.period_uncertainty(), n_mcs, seed)
    return reserve_adequacy(reserve_total, el_expect, samples)


class _Decoder:
    """Vectorized decoding of a (P, dim) block of particle positions."""

    def __init__(self, scenario, el_expect, n_mcs: int, rng: np.random.Generator):
        self.sc = scenario
        self.T = scenario.horizon
        self.N = len(scenario.units)
        self.el = np.asarray(el_expect, dtype=float)
        self.periods = scenario.period_uncertainty()
        self.n_mcs = n_mcs
        self.rng = rng
        self.cn_max = np.asarray(scenario.cnload_max, dtype=float)
        units = scenario.units
        self.pmin = np.array([u.p_min for u in units])
        self.pmax = np.array([u.p_max for u in units])
        e = scenario.ess
        per_t = np.concatenate([self.pmax, self.pmax, [e.p_ch_max, e.p_dc_max]])
        self.ub = np.tile(per_t, self.T)
        self.lb = np.zeros_like(self.ub)

    @property
    def dim(self) -> int:
        return self.ub.size

    def _repair_balance(self, u, p, ess_net):
        """Shift committed outputs, in proportion to their room, into the feasible balance band."""
        pmin, pmax = self.pmin[None, :, None], self.pmax[None, :, None]
        lo = self.el[None, :] - ess_net
        hi = lo + self.cn_max[None, :]
        total = p.sum(axis=1)
        up_room = u * (pmax - p)
        down_room = u * (p - pmin)
        raise_by = np.minimum(np.maximum(lo - total, 0.0), up_room.sum(axis=1))
        lower_by = np.minimum(np.maximum(total - hi, 0.0), down_room.sum(axis=1))
        with np.errstate(invalid="ignore", divide="ignore"):
            up_share = np.nan_to_num(up_room / up_room.sum(axis=1, keepdims=True))
            down_share = np.nan_to_num(down_room / down_room.sum(axis=1, keepdims=True))
        p = p + up_share * raise_by[:, None, :] - down_share * lower_by[:, None, :]
        return np.where(u > 0, np.clip(p, pmin, pmax), 0.0)

    def required_reserve(self, P: int) -> np.ndarray:
        """(P, T) sampled alpha-quantiles of the EL deviation, one fresh sample per particle."""
        n = self.n_mcs
        draws = np.vstack([pu.sample_equivalent_load(P * n, self.rng) for pu in self.periods])
        return mcs_required_reserve(draws.reshape(self.T * P, n), np.repeat(self.el, P),
                                    self.sc.alpha).reshape(self.T, P).T

    def decode(self, X: np.ndarray, required: Optional[np.ndarray] = None):
        P, T, N = X.shape[0], self.T, self.N
        e = self.sc.ess
        Y = X.reshape(P, T, 2 * N + 2)
        p = Y[:, :, :N].transpose(0, 2, 1)  # (P, N, T)
        r = Y[:, :, N:2 * N].transpose(0, 2, 1)
        ch = Y[:, :, 2 * N].copy()
        dc = Y[:, :, 2 * N + 1].copy()

        pmin, pmax = self.pmin[None, :, None], self.pmax[None, :, None]
        u = (p >= pmin / 2).astype(float)
        p = np.where(u > 0, np.clip(p, pmin, pmax), 0.0)
        r = np.where(u > 0, np.clip(r, 0.0, pmax - p), 0.0)

        # Net discharge band that the committed units cannot cover on their own.
        net_lo = self.el[None, :] - (u * pmax).sum(axis=1)
        net_hi = self.el[None, :] + self.cn_max[None, :] - (u * pmin).sum(axis=1)
        soc = np.empty((P, T + 1))
        soc[:, 0] = e.c_init
        clamp = np.zeros(P)
        for t in range(T):
            net = dc[:, t] - ch[:, t]
            outside = (net < net_lo[:, t]) | (net > net_hi[:, t])
            net = np.clip(net, net_lo[:, t], np.maximum(net_lo[:, t], net_hi[:, t]))
            ch[:, t] = np.where(outside, np.clip(-net, 0.0, e.p_ch_max), ch[:, t])
            dc[:, t] = np.where(outside, np.clip(net, 0.0, e.p_dc_max), dc[:, t])
            if t == T - 1:
                need = e.c_init - soc[:, t]
                want_ch = np.clip(np.maximum(need, 0.0) / (e.eta_ch * DT), 0.0, e.p_ch_max)
                want_dc = np.clip(np.maximum(-need, 0.0) * e.eta_dc / DT, 0.0, e.p_dc_max)
                ch[:, t], dc[:, t] = want_ch, want_dc
            nxt = soc[:, t] + (e.eta_ch * ch[:, t] - dc[:, t] / e.eta_dc) * DT
            over = np.maximum(nxt - e.c_max, 0.0)
            cut = np.minimum(over / (e.eta_ch * DT), ch[:, t])
            ch[:, t] -= cut
            under = np.maximum(e.c_min - (soc[:, t] + (e.eta_ch * ch[:, t] - dc[:, t] / e.eta_dc) * DT), 0.0)
            cut_dc = np.minimum(under * e.eta_dc / DT, dc[:, t])
            dc[:, t] -= cut_dc
            if t < T - 1:
                clamp += cut + cut_dc
            soc[:, t + 1] = np.clip(soc[:, t] + (e.eta_ch * ch[:, t] - dc[:, t] / e.eta_dc) * DT, e.c_min, e.c_max)
        terminal = np.abs(soc[:, T] - e.c_init)

        r_ess = np.maximum(0.0, np.minimum(e.eta_dc * (soc[:, :T] - e.c_min) / DT, e.p_dc_max - dc))
        p = self._repair_balance(u, p, dc - ch)
        r = np.where(u > 0, np.clip(r, 0.0, pmax - p), 0.0)
        supply = p.sum(axis=1) + dc - ch
        cn = supply - self.el[None, :]
        shortage = np.maximum(-cn, 0.0)
        surplus = np.maximum(cn - self.cn_max[None, :], 0.0)
        cn = np.clip(cn, 0.0, self.cn_max[None, :])
        balance = (shortage + surplus).sum(axis=1)
        reserve = r.sum(axis=1) + r_ess
        if required is None:
            required = self.required_reserve(P)
        # Zero exactly when the sampled satisfaction rate reaches alpha in every period.
        chance = np.maximum(required - reserve, 0.0).sum(axis=1)

        prev = np.concatenate([np.zeros((P, N, 1)), u[:, :, :-1]], axis=2)
        s = np.maximum(u - prev, 0.0)
        units = self.sc.units
        fixed = np.array([x.fixed_cost for x in units])[None, :, None]
        slope = np.array([x.fuel_slope for x in units])[None, :, None]
        start = np.array([x.startup_cost for x in units])[None, :, None]
        rprice = np.array([x.reserve_price for x in units])[None, :, None]
        sign = 1.0 if self.sc.charge_is_cost else -1.0
        cost = ((u * fixed + slope * p * DT + start * s + rprice * r).sum(axis=(1, 2))
                + e.discharge_price * DT * dc.sum(axis=1)
                + sign * e.charge_price * DT * ch.sum(axis=1)
                + self.sc.cnload_price * DT * cn.sum(axis=1))
        viol = balance + chance + clamp + terminal
        penalized = cost + PENALTY * viol
        feasible = (balance <= FEASIBILITY_TOL) & (terminal <= FEASIBILITY_TOL) & (chance <= 1e-9)
        parts = dict(u=u, s=s, p=p, r=r, ch=ch, dc=dc, soc=soc, r_ess=r_ess, cn=cn)
        details = dict(balance=balance, chance=chance, clamp=clamp, terminal=terminal)
        return cost, penalized, feasible, parts, details


def pso_optimize(scenario, params: Optional[PsoParams] = None) -> HiaResult:
    params = params or PsoParams()
    start = time.perf_counter()
    model = build_ccp_model(scenario)
    el = [pd.el_expect for pd in model.periods]
    rng = np.random.default_rng(params.seed)
    dec = _Decoder(scenario, el, params.n_mcs, np.random.default_rng(params.seed + 1_000_003))
    lb, ub = dec.lb, dec.ub
    span = ub - lb
    vmax = params.vmax_frac * span
    X = lb + rng.random((params.population, dec.dim)) * span
    V = (rng.random((params.population, dec.dim)) * 2 - 1) * vmax
    req = dec.required_reserve(params.population)
    _, pen, feas, _, _ = dec.decode(X, req)
    pbest = X.copy()
    pbest_cost = pen.copy()
    pbest_feas = feas.copy()
    pbest_req = req.copy()
    g = int(np.argmin(pbest_cost))
    trace = []

    for it in range(params.iterations):
        r1 = rng.random(X.shape)
        r2 = rng.random(X.shape)
        V = params.inertia * V + params.cognitive * r1 * (pbest - X) + params.social * r2 * (pbest[g] - X)
        V = np.clip(V, -vmax, vmax)
        X = np.clip(X + V, lb, ub)
        req = dec.required_reserve(params.population)
        _, pen, feas, _, _ = dec.decode(X, req)
        better = pen < pbest_cost
        pbest[better] = X[better]
        pbest_req[better] = req[better]
        pbest_cost[better] = pen[better]
        pbest_feas[better] = feas[better]
        g = int(np.argmin(pbest_cost))
        trace.append(TraceRow(it + 1, float(pbest_cost[g]), bool(pbest_feas[g])))

    swarm = [Particle(X[i], V[i], pbest[i], float(pbest_cost[i])) for i in range(params.population)]

    # Re-decode the global best against the chance check that admitted it.
    cost, pen, feas, parts, details = dec.decode(pbest[g:g + 1], pbest_req[g:g + 1])
    sched = Schedule(u=parts["u"][0], s=parts["s"][0], p_mt=parts["p"][0], r_mt=parts["r"][0],
                     p_ch=parts["ch"][0], p_dc=parts["dc"][0], soc=parts["soc"][0], r_ess=parts["r_ess"][0],
                     p_cnload=parts["cn"][0])
    sched.cost = model_cost(model, sched)
    sched.meta = {"method": "hia", "seed": params.seed}
    return HiaResult(sched, sched.total_cost, float(pen[0]), bool(feas[0]), trace, time.perf_counter() - start,
                     {k: float(v[0]) for k, v in details.items()}, swarm)
