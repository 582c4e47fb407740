"""In-memory representation of a mixed-integer linear program."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy import sparse

from ..errors import ParameterError

LE, EQ, GE = "<=", "==", ">="
_SENSES = (LE, EQ, GE)


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = math.inf
    integer: bool = False


@dataclass
class Constraint:
    coeffs: dict
    sense: str
    rhs: float
    name: str = ""


@dataclass
class MilpProblem:
    """Minimize ``c @ x + offset`` subject to linear rows and variable bounds."""

    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    offset: float = 0.0
    name: str = "problem"

    def __post_init__(self):
        self._index = {v.name: i for i, v in enumerate(self.variables)}

    # building -------------------------------------------------------------
    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf, integer: bool = False,
                cost: float = 0.0) -> int:
        if name in self._index:
            raise ParameterError(f"duplicate variable name {name!r}")
        if lb > ub:
            raise ParameterError(f"variable {name!r} has lb > ub")
        if integer and not (math.isfinite(lb) and math.isfinite(ub)):
            raise ParameterError(f"integer variable {name!r} must be bounded")
        idx = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), bool(integer)))
        self._index[name] = idx
        if cost:
            self.objective[idx] = self.objective.get(idx, 0.0) + float(cost)
        return idx

    def add_binary(self, name: str, cost: float = 0.0) -> int:
        return self.add_var(name, 0.0, 1.0, integer=True, cost=cost)

    def add_constraint(self, coeffs: Mapping[int, float], sense: str, rhs: float, name: str = "") -> int:
        if sense not in _SENSES:
            raise ParameterError(f"unknown relation {sense!r}")
        n = len(self.variables)
        row = {}
        for j, a in coeffs.items():
            if not 0 <= j < n:
                raise ParameterError(f"row {name!r} references variable {j} of {n}")
            if a:
                row[j] = row.get(j, 0.0) + float(a)
        self.constraints.append(Constraint(row, sense, float(rhs), name or f"r{len(self.constraints)}"))
        return len(self.constraints) - 1

    def add_cost(self, j: int, c: float):
        self.objective[j] = self.objective.get(j, 0.0) + float(c)

    # queries --------------------------------------------------------------
    def index(self, name: str) -> int:
        return self._index[name]

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def integer_indices(self) -> list:
        return [i for i, v in enumerate(self.variables) if v.integer]

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for j, a in self.objective.items():
            c[j] = a
        return c

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return lb, ub

    def matrices(self):
        """Return (A_ub, b_ub, A_eq, b_eq) as CSR matrices; GE rows are negated."""
        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for con in self.constraints:
            if con.sense == EQ:
                eq_rows.append(con.coeffs)
                eq_rhs.append(con.rhs)
            elif con.sense == LE:
                ub_rows.append(con.coeffs)
                ub_rhs.append(con.rhs)
            else:
                ub_rows.append({j: -a for j, a in con.coeffs.items()})
                ub_rhs.append(-con.rhs)
        return (_csr(ub_rows, self.n_vars), np.array(ub_rhs), _csr(eq_rows, self.n_vars), np.array(eq_rhs))

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.cost_vector() @ x + self.offset) if self.n_vars else float(self.offset)

    def max_violation(self, x) -> float:
        """Largest row or bound violation of assignment ``x``."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        lb, ub = self.bounds()
        if self.n_vars:
            worst = max(worst, float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0)))
        for con in self.constraints:
            lhs = sum(a * x[j] for j, a in con.coeffs.items())
            if con.sense == LE:
                worst = max(worst, lhs - con.rhs)
            elif con.sense == GE:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return worst


def _csr(rows, n):
    data, indices, indptr = [], [], [0]
    for row in rows:
        for j in sorted(row):
            indices.append(j)
            data.append(row[j])
        indptr.append(len(indices))
    return sparse.csr_matrix((np.array(data, dtype=float), np.array(indices, dtype=np.int64),
                              np.array(indptr, dtype=np.int64)), shape=(len(rows), n))


@dataclass
class MilpSolution:
    status: str
    objective: float = math.nan
    x: Optional[np.ndarray] = None
    bound: float = math.nan
    nodes: int = 0
    wall_time: float = 0.0

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    GAP_LIMIT = "gap_limit"
    NODE_LIMIT = "node_limit"
    TIME_LIMIT = "time_limit"

    @property
    def ok(self) -> bool:
        return self.status == self.OPTIMAL

    def value(self, problem: MilpProblem, name: str) -> float:
        return float(self.x[problem.index(name)])
