import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _factories import random_milp, vertex_enumeration
from mgsched.errors import ParameterError, TooManyIntegersError
from mgsched.milp import (EQ, GE, LE, MilpProblem, MilpSolution, SolveOptions, branch_and_bound, brute_force,
                          export_mps, name_table, read_mps, solve_lp_relaxation, write_mps)
from mgsched.milp.lp import LpEngine

highspy = pytest.importorskip("highspy")


def knapsack() -> MilpProblem:
    p = MilpProblem(name="knap")
    xs = [p.add_binary(f"x{i}", cost=-v) for i, v in enumerate((5, 4, 3))]
    p.add_constraint(dict(zip(xs, (2, 3, 4))), LE, 5, "weight")
    return p


class TestProblem:
    def test_integer_needs_bounds(self):
        p = MilpProblem()
        with pytest.raises(ParameterError):
            p.add_var("y", 0, math.inf, integer=True)

    def test_duplicate_names(self):
        p = MilpProblem()
        p.add_var("x")
        with pytest.raises(ParameterError):
            p.add_var("x")

    def test_bad_index(self):
        p = MilpProblem()
        p.add_var("x")
        with pytest.raises(ParameterError):
            p.add_constraint({3: 1.0}, LE, 1.0)

    def test_evaluate_and_violation(self):
        p = knapsack()
        x = np.array([1.0, 1.0, 1.0])
        assert p.evaluate(x) == -12
        assert p.max_violation(x) == pytest.approx(4.0)


class TestLp:
    def test_lower_bound_active(self):
        p = MilpProblem()
        x = p.add_var("x", -math.inf, math.inf, cost=1.0)
        p.add_constraint({x: 1}, GE, 3)
        p.add_constraint({x: 1}, LE, 10)
        sol = solve_lp_relaxation(p)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(3.0)
        assert sol.x[0] == pytest.approx(3.0)

    def test_infeasible_pair(self):
        p = MilpProblem()
        x = p.add_var("x", -math.inf, math.inf)
        p.add_constraint({x: 1}, GE, 2)
        p.add_constraint({x: 1}, LE, 1)
        assert solve_lp_relaxation(p).status == "infeasible"

    def test_unbounded(self):
        p = MilpProblem()
        p.add_var("x", -math.inf, math.inf, cost=1.0)
        assert solve_lp_relaxation(p).status == "unbounded"

    def test_vertex_enumeration_oracle(self):
        rng = np.random.default_rng(0)
        checked = 0
        for _ in range(60):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 5))
            A = rng.integers(-4, 5, size=(m, n)).astype(float)
            b = rng.integers(-3, 8, size=m).astype(float)
            c = rng.normal(size=n)
            lb, ub = -rng.uniform(0, 5, n), rng.uniform(0, 5, n)
            p = MilpProblem()
            for j in range(n):
                p.add_var(f"x{j}", lb[j], ub[j], cost=c[j])
            for i in range(m):
                p.add_constraint({j: A[i, j] for j in range(n)}, LE, b[i])
            oracle = vertex_enumeration(c, A, b, lb, ub)
            sol = solve_lp_relaxation(p)
            if math.isinf(oracle):
                assert sol.status == "infeasible"
            else:
                assert sol.status == "optimal"
                assert sol.objective == pytest.approx(oracle, abs=1e-7)
                assert sol.residual <= 1e-7
                checked += 1
        assert checked > 20


class TestBranchAndBound:
    def test_knapsack(self):
        sol = branch_and_bound(knapsack())
        assert sol.status == MilpSolution.OPTIMAL
        assert sol.objective == pytest.approx(-9)
        np.testing.assert_allclose(sol.x, [1, 1, 0])

    def test_pure_lp_matches_relaxation(self):
        p = MilpProblem()
        x = p.add_var("x", 0, 4, cost=-1)
        y = p.add_var("y", 0, 4, cost=-2)
        p.add_constraint({x: 1, y: 1}, LE, 5)
        assert branch_and_bound(p).objective == pytest.approx(solve_lp_relaxation(p).objective)

    def test_infeasible(self):
        p = MilpProblem()
        y = p.add_binary("y")
        p.add_constraint({y: 2}, EQ, 1)
        assert branch_and_bound(p).status == MilpSolution.INFEASIBLE
        assert brute_force(p).status == MilpSolution.INFEASIBLE

    def test_empty_problem(self):
        p = MilpProblem()
        p.offset = 4.5
        assert brute_force(p).objective == 4.5
        assert branch_and_bound(p).objective == 4.5

    def test_node_limit_is_honest(self):
        rng = np.random.default_rng(7)
        p = random_milp(rng, 12, 3)
        sol = branch_and_bound(p, SolveOptions(node_limit=1, rounding_heuristic=False))
        assert sol.status in (MilpSolution.NODE_LIMIT, MilpSolution.OPTIMAL, MilpSolution.INFEASIBLE)

    @settings(deadline=None, max_examples=40)
    @given(st.integers(0, 10**6), st.integers(1, 8), st.integers(0, 3), st.booleans())
    def test_matches_brute_force(self, seed, n_int, n_cont, general):
        p = random_milp(np.random.default_rng(seed), n_int, n_cont, general)
        ref = brute_force(p)
        sol = branch_and_bound(p, SolveOptions(rel_gap=1e-12))
        assert sol.status == ref.status
        if ref.status == MilpSolution.OPTIMAL:
            assert sol.objective == pytest.approx(ref.objective, abs=1e-9)
            assert p.max_violation(sol.x) <= 1e-6
            assert sol.bound <= sol.objective + 1e-9
            xi = sol.x[p.integer_indices]
            assert np.all(np.abs(xi - np.round(xi)) <= 1e-6)

    def test_deterministic(self):
        p = random_milp(np.random.default_rng(42), 10, 3)
        a, b = branch_and_bound(p), branch_and_bound(p)
        assert (a.status, a.objective, a.nodes) == (b.status, b.objective, b.nodes)
        assert a.x is None and b.x is None or np.array_equal(a.x, b.x)

    @pytest.mark.parametrize("seed", range(8))
    def test_brute_force_pruning_is_exact(self, seed):
        p = random_milp(np.random.default_rng(seed), 6, 3, general_ints=True)
        engine = LpEngine(p)
        ints = p.integer_indices
        best = math.inf
        for combo in itertools.product(*[range(int(engine.ub[j]) + 1) for j in ints]):
            lb, ub = engine.lb.copy(), engine.ub.copy()
            lb[ints] = ub[ints] = combo
            sol = engine.solve(lb, ub)
            if sol.status == "optimal":
                best = min(best, sol.objective)
        got = brute_force(p)
        if math.isinf(best):
            assert got.status == MilpSolution.INFEASIBLE
        else:
            assert got.objective == pytest.approx(best, abs=1e-12)
            assert got.nodes == np.prod([int(engine.ub[j]) + 1 for j in ints])

    def test_brute_force_refuses(self):
        p = MilpProblem()
        for i in range(5):
            p.add_binary(f"y{i}")
        with pytest.raises(TooManyIntegersError):
            brute_force(p, max_binaries=4)


def solve_with_highs(text: str, tmp_path) -> float:
    path = tmp_path / "m.mps"
    path.write_text(text)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    return h.getInfo().objective_function_value, h.getModelStatus()


class TestMps:
    def test_empty(self):
        text = export_mps(MilpProblem())
        lines = text.splitlines()
        assert lines[0].startswith("NAME")
        assert lines[-1] == "ENDATA"

    def test_markers(self):
        text = export_mps(knapsack())
        assert "'INTORG'" in text and "'INTEND'" in text
        for line in text.splitlines():
            for tok in line.split():
                if not tok.startswith("'"):
                    assert len(tok) <= 12

    def test_knapsack_external_solver(self, tmp_path):
        obj, _ = solve_with_highs(export_mps(knapsack()), tmp_path)
        assert obj == pytest.approx(-9)

    def test_offset_and_mixed_bounds(self, tmp_path):
        p = MilpProblem(name="mix")
        x = p.add_var("x", -math.inf, math.inf, cost=1.0)
        y = p.add_var("y", -3, 2, integer=True, cost=2.0)
        p.add_var("z", 1.5, 1.5, cost=1.0)
        w = p.add_var("w", -math.inf, 4.0, cost=-1.0)
        p.add_constraint({x: 1, y: 1}, GE, -2.25)
        p.add_constraint({x: 1}, LE, 10)
        p.add_constraint({w: 1, x: -1}, GE, -20)
        p.offset = 7.0
        ours = branch_and_bound(p)
        obj, _ = solve_with_highs(export_mps(p), tmp_path)
        assert ours.objective == pytest.approx(obj, abs=1e-9)

    @settings(deadline=None, max_examples=25)
    @given(st.integers(0, 10**6))
    def test_round_trip(self, seed):
        p = random_milp(np.random.default_rng(seed), 5, 2, general_ints=True)
        q = read_mps(export_mps(p))
        a, b = brute_force(p), brute_force(q)
        assert a.status == b.status
        if a.status == MilpSolution.OPTIMAL:
            # The 12-character value field keeps about 11 significant digits.
            assert a.objective == pytest.approx(b.objective, rel=1e-9, abs=1e-9)

    def test_sidecar(self, tmp_path):
        mps, names = write_mps(knapsack(), tmp_path / "k.mps")
        rows = [line.split("\t") for line in names.read_text().splitlines()]
        assert rows[0] == ["x0", "C0000001"]
        assert ["weight", "R0000001"] in rows
        assert name_table(knapsack()) == names.read_text()
        assert mps.read_text() == export_mps(knapsack())
