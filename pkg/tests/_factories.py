"""Random instance generators shared by the unit and acceptance tests."""

from __future__ import annotations

import itertools
import math

import numpy as np

from mgsched.milp import EQ, GE, LE, MilpProblem
from mgsched.scenario import scenario_from_dict
from mgsched.seqops import ProbSeq


def random_probseq(rng: np.random.Generator, n_max: int = 30, q: float = 1.0, sparse: bool = True) -> ProbSeq:
    n = int(rng.integers(0, n_max + 1))
    p = rng.random(n + 1)
    if sparse and n > 2:
        p[rng.random(n + 1) < 0.3] = 0.0
        if p.sum() == 0:
            p[0] = 1.0
    return ProbSeq(q, p / p.sum())


def random_scenario_dict(rng: np.random.Generator, horizon: int, max_ne: int = 30) -> dict:
    """Small feasible-by-construction scenario whose equivalent-load sequences have at most ``max_ne`` steps."""
    n_units = int(rng.integers(1, 4))
    units = []
    for i in range(n_units):
        p_max = float(rng.uniform(20, 60))
        units.append({
            "name": f"G{i + 1}", "p_min": float(rng.uniform(0.1, 0.3) * p_max), "p_max": p_max,
            "fixed_cost": float(rng.uniform(0.5, 3.0)), "fuel_slope": float(rng.uniform(0.1, 0.4)),
            "startup_cost": float(rng.uniform(0.5, 3.0)), "reserve_price": float(rng.uniform(0.0, 0.05)),
        })
    cap = sum(u["p_max"] for u in units)
    c_max = float(rng.uniform(40, 150))
    c_min = float(rng.uniform(0.1, 0.3) * c_max)
    ess = {"c_min": c_min, "c_max": c_max, "c_init": float(rng.uniform(c_min, c_max)),
           "p_ch_max": float(rng.uniform(5, 30)), "p_dc_max": float(rng.uniform(5, 30)),
           "eta_ch": float(rng.uniform(0.8, 1.0)), "eta_dc": float(rng.uniform(0.8, 1.0)),
           "charge_price": float(rng.uniform(0, 0.5)), "discharge_price": float(rng.uniform(0, 0.7))}
    mus = rng.uniform(0.2, 0.6, horizon) * cap
    frac = float(rng.uniform(0.05, 0.15))
    top = float(np.max(mus * (1 + 4 * frac)))
    # The load sequence has the longest support; pick q so that it spans at most max_ne steps.
    q = math.ceil(top / max_ne * 100 + 1) / 100
    pv_mu = [float(v) if v > 0.05 else 0 for v in rng.uniform(0, 0.8, horizon)]
    pv_sigma = [0.3 * math.sqrt(m * (1 - m)) if m else 0 for m in pv_mu]
    return {
        "name": "random", "horizon": horizon, "step_q": q, "alpha": float(rng.uniform(0.5, 1.0)),
        "units": units, "ess": ess,
        "wind": {"turbine": {"v_in": 3, "v_star": 13, "v_out": 25, "p_star": float(rng.uniform(5, 25))},
                 "k": 2.0, "gamma": [float(g) for g in rng.uniform(4, 10, horizon)]},
        "pv": {"p_max": float(rng.uniform(5, 30)), "mu": pv_mu, "sigma": pv_sigma},
        "load": {"mu": [float(m) for m in mus], "sigma_frac": frac},
        "cnload_max": float(rng.uniform(0, 10)),
    }


def random_scenario(rng: np.random.Generator, horizon: int, max_ne: int = 30):
    return scenario_from_dict(random_scenario_dict(rng, horizon, max_ne))


def random_milp(rng: np.random.Generator, n_int: int, n_cont: int = 0, general_ints: bool = False) -> MilpProblem:
    """Random bounded MILP; feasibility is not guaranteed, which exercises the infeasible path too."""
    p = MilpProblem(name="rand")
    for j in range(n_int):
        ub = int(rng.integers(1, 3)) if general_ints else 1
        p.add_var(f"y{j}", 0, ub, integer=True, cost=float(rng.integers(-10, 11)))
    for j in range(n_cont):
        p.add_var(f"x{j}", float(rng.uniform(-2, 0)), float(rng.uniform(1, 5)), cost=float(rng.normal()))
    n = n_int + n_cont
    for i in range(int(rng.integers(1, 6))):
        coeffs = {j: float(rng.integers(-5, 6)) for j in range(n) if rng.random() < 0.6}
        if not coeffs:
            continue
        sense = [LE, GE, EQ][int(rng.choice(3, p=[0.6, 0.3, 0.1]))]
        scale = sum(abs(c) for c in coeffs.values())
        rhs = float(rng.integers(-2, int(scale) + 2)) if sense != GE else float(rng.integers(-int(scale) - 2, 3))
        if sense == EQ and n_cont == 0:
            rhs = float(round(rhs))
        p.add_constraint(coeffs, sense, rhs, f"c{i}")
    p.offset = float(rng.integers(-3, 4))
    return p


def vertex_enumeration(c, A_ub, b_ub, lb, ub):
    """Exact LP optimum of min c.x over a bounded polytope, by enumerating basic solutions."""
    n = len(c)
    rows = [(np.asarray(a, float), float(b)) for a, b in zip(A_ub, b_ub)]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append((e, float(ub[j])))
        rows.append((-e, -float(lb[j])))
    best = math.inf
    for combo in itertools.combinations(range(len(rows)), n):
        M = np.array([rows[i][0] for i in combo])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, np.array([rows[i][1] for i in combo]))
        if all(a @ x <= b + 1e-9 for a, b in rows):
            best = min(best, float(np.dot(c, x)))
    return best
