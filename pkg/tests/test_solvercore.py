"""LP backends, branch and bound, rounding heuristic, exhaustive oracle.

The two LP backends (built-in dense simplex, HiGHS through SciPy) are
cross-checked on randomized feasible instances; the integer layer is
checked against the brute-force oracle and hand-solvable programs.
"""

import numpy as np
import pytest

from aevplan.costmodel import Mode
from aevplan.errors import InputError
from aevplan.pathsets import Strategy
from aevplan.planmodel import SENSE_EQ, SENSE_GE, SENSE_LE, build_problem
from aevplan.solvercore import (
    LinearProgram,
    SolveOptions,
    SolveStatus,
    brute_force_oracle,
    round_up_heuristic,
    solve_lp,
    solve_mip,
)
from helpers import catalog_for, load_case, rel_diff

DENSE = SolveOptions(backend="dense")
HIGHS = SolveOptions(backend="highs")


def random_feasible_lp(rng):
    """A bounded LP guaranteed feasible at a sampled interior point."""
    n = rng.integers(3, 11)
    m = rng.integers(2, 7)
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(1.0, 5.0, size=n)
    senses = rng.choice([SENSE_LE, SENSE_GE, SENSE_EQ], size=m).astype(np.int8)
    slack = rng.uniform(0.5, 2.0, size=m)
    rhs = A @ x0
    rhs[senses == SENSE_LE] += slack[senses == SENSE_LE]
    rhs[senses == SENSE_GE] -= slack[senses == SENSE_GE]
    return LinearProgram(
        objective=rng.normal(size=n),
        A=A,
        senses=senses,
        rhs=rhs,
        lb=np.zeros(n),
        ub=np.full(n, 10.0),
    )


class TestLpBackends:
    def test_dense_and_highs_agree_on_random_instances(self):
        rng = np.random.default_rng(42)
        solved = 0
        for _ in range(25):
            lp = random_feasible_lp(rng)
            xd, rd = solve_lp(lp, DENSE)
            xh, rh = solve_lp(lp, HIGHS)
            assert rd.status is SolveStatus.OPTIMAL, rd
            assert rh.status is SolveStatus.OPTIMAL, rh
            assert rd.objective == pytest.approx(rh.objective, rel=1e-7, abs=1e-7)
            solved += 1
        assert solved == 25

    def test_infeasible_detected(self):
        lp = LinearProgram(
            objective=[1.0],
            A=[[1.0]],
            senses=[SENSE_LE],
            rhs=[-1.0],           # x <= -1 with x >= 0
            lb=[0.0],
            ub=[np.inf],
        )
        for opts in (DENSE, HIGHS):
            x, rep = solve_lp(lp, opts)
            assert x is None
            assert rep.status is SolveStatus.INFEASIBLE

    def test_unbounded_detected(self):
        lp = LinearProgram(
            objective=[-1.0],
            A=[[0.0]],
            senses=[SENSE_LE],
            rhs=[1.0],
            lb=[0.0],
            ub=[np.inf],
        )
        for opts in (DENSE, HIGHS):
            x, rep = solve_lp(lp, opts)
            assert x is None
            assert rep.status is SolveStatus.UNBOUNDED

    def test_crossed_bounds_infeasible(self):
        lp = LinearProgram(
            objective=[1.0],
            A=[[1.0]],
            senses=[SENSE_LE],
            rhs=[5.0],
            lb=[2.0],
            ub=[1.0],
        )
        x, rep = solve_lp(lp, DENSE)
        assert x is None and rep.status is SolveStatus.INFEASIBLE

    def test_bound_overrides_narrow_the_feasible_set(self):
        lp = LinearProgram(
            objective=[1.0, 1.0],
            A=[[1.0, 1.0]],
            senses=[SENSE_GE],
            rhs=[3.0],
            lb=[0.0, 0.0],
            ub=[10.0, 10.0],
        )
        x, rep = solve_lp(lp, DENSE)
        assert rep.objective == pytest.approx(3.0)
        x2, rep2 = solve_lp(lp, DENSE, lb=np.array([2.5, 2.5]), ub=lp.ub)
        assert rep2.objective == pytest.approx(5.0)
        assert np.all(x2 >= 2.5 - 1e-9)

    def test_unknown_backend_rejected(self):
        lp = random_feasible_lp(np.random.default_rng(0))
        with pytest.raises(InputError):
            solve_lp(lp, SolveOptions(backend="cplex"))


class TestAutoBackend:
    def test_small_instances_take_the_dense_path(self):
        lp = random_feasible_lp(np.random.default_rng(7))
        x, rep = solve_lp(lp, SolveOptions(backend="auto"))
        assert rep.status is SolveStatus.OPTIMAL

    def test_degenerate_planning_lp_falls_back_to_highs(self):
        # the four-town planning LP stalls the dense simplex (massive
        # degeneracy from the zero-stock parking recursion); auto must
        # recover through HiGHS instead of reporting an error.
        case = load_case("diamond4")
        catalog = catalog_for(case, Strategy.OPTIMAL, Mode.PASSENGER)
        problem = build_problem(
            case.expnet, case.demands, catalog, Mode.PASSENGER, Strategy.OPTIMAL,
            case.veh, case.charger, case.costs,
        )
        forced = SolveOptions(backend="auto", dense_var_limit=10_000)
        x_auto, rep_auto = solve_lp(problem, forced)
        assert x_auto is not None
        assert rep_auto.status is SolveStatus.OPTIMAL
        assert "dense-backend failure" in rep_auto.message
        x_h, rep_h = solve_lp(problem, HIGHS)
        assert rep_auto.objective == pytest.approx(rep_h.objective, rel=1e-9)

    def test_default_sizing_avoids_the_dense_stall(self):
        case = load_case("diamond4")
        catalog = catalog_for(case, Strategy.OPTIMAL, Mode.PASSENGER)
        problem = build_problem(
            case.expnet, case.demands, catalog, Mode.PASSENGER, Strategy.OPTIMAL,
            case.veh, case.charger, case.costs,
        )
        assert problem.n_vars > SolveOptions().dense_var_limit
        x, rep = solve_lp(problem, SolveOptions(backend="auto"))
        assert rep.status is SolveStatus.OPTIMAL
        assert "failure" not in rep.message


def knapsackish():
    """min 3x + 2y  s.t.  x + y >= 3,  2x + y >= 4,  x,y integer in [0,5]."""
    return LinearProgram(
        objective=[3.0, 2.0],
        A=[[1.0, 1.0], [2.0, 1.0]],
        senses=[SENSE_GE, SENSE_GE],
        rhs=[3.0, 4.0],
        lb=[0.0, 0.0],
        ub=[5.0, 5.0],
        integrality=[True, True],
    )


class TestIntegerLayer:
    def test_branch_and_bound_matches_hand_solution(self):
        vals, rep = solve_mip(knapsackish())
        assert rep.status is SolveStatus.OPTIMAL
        # x=1,y=2 gives 7; x=2,y=1 gives 8; x=0,y=4 gives 8
        assert rep.objective == pytest.approx(7.0)
        assert vals[0] == pytest.approx(1.0) and vals[1] == pytest.approx(2.0)

    def test_oracle_agrees_with_branch_and_bound(self):
        prob = knapsackish()
        vals_bb, rep_bb = solve_mip(prob)
        vals_bf, rep_bf = brute_force_oracle(prob, {0: (0, 5), 1: (0, 5)})
        assert rep_bf.status is SolveStatus.OPTIMAL
        assert rel_diff(rep_bb.objective, rep_bf.objective) <= 1e-9
        assert rep_bf.nodes == 36  # every assignment visited

    def test_integral_lp_shortcuts_to_optimal(self):
        lp = LinearProgram(
            objective=[1.0],
            A=[[1.0]],
            senses=[SENSE_GE],
            rhs=[2.0],
            lb=[0.0],
            ub=[10.0],
            integrality=[True],
        )
        vals, rep = solve_mip(lp)
        assert rep.status is SolveStatus.OPTIMAL and rep.nodes == 1
        assert vals[0] == pytest.approx(2.0)

    def test_infeasible_mip_reported(self):
        lp = LinearProgram(
            objective=[1.0],
            A=[[1.0]],
            senses=[SENSE_GE],
            rhs=[4.0],
            lb=[0.0],
            ub=[3.0],
            integrality=[True],
        )
        vals, rep = solve_mip(lp)
        assert vals is None and rep.status is SolveStatus.INFEASIBLE

    def test_node_limit_degrades_gracefully(self):
        prob = knapsackish()
        vals, rep = solve_mip(prob, SolveOptions(node_limit=1))
        # round-up incumbent exists, proof cut short
        assert rep.status in (SolveStatus.FEASIBLE, SolveStatus.OPTIMAL)
        if rep.status is SolveStatus.FEASIBLE:
            assert rep.objective >= rep.best_bound - 1e-9

    def test_solutions_are_integral_and_deterministic(self):
        case = load_case("twin3")
        catalog = catalog_for(case, Strategy.OPTIMAL, Mode.PASSENGER)
        problem = build_problem(
            case.expnet, case.demands, catalog, Mode.PASSENGER, Strategy.OPTIMAL,
            case.veh, case.charger, case.costs,
        )
        v1, r1 = solve_mip(problem)
        v2, r2 = solve_mip(problem)
        ints = np.nonzero(problem.integrality)[0]
        assert np.all(np.abs(v1[ints] - np.round(v1[ints])) < 1e-9)
        assert np.array_equal(v1, v2)
        assert r1.objective == r2.objective
        assert r1.nodes == r2.nodes


class TestRoundUpHeuristic:
    def test_ceils_integers_and_reports_gap(self):
        prob = knapsackish()
        lp_vals, lp_rep = solve_lp(prob)
        got = round_up_heuristic(prob, lp_vals)
        assert got is not None
        vals, obj, gap = got
        assert np.all(vals >= lp_vals - 1e-9)
        assert np.all(np.abs(vals[:2] - np.round(vals[:2])) < 1e-12)
        assert obj >= lp_rep.objective - 1e-9
        assert gap == pytest.approx(
            (obj - lp_rep.objective) / max(1e-12, abs(lp_rep.objective))
        )

    def test_respects_upper_bounds(self):
        lp = LinearProgram(
            objective=[1.0],
            A=[[1.0]],
            senses=[SENSE_GE],
            rhs=[1.2],
            lb=[0.0],
            ub=[1.4],          # ceil(1.2) = 2 violates the bound
            integrality=[True],
        )
        lp_vals, _ = solve_lp(lp)
        assert round_up_heuristic(lp, lp_vals) is None


class TestBruteForceOracle:
    def test_missing_range_rejected(self):
        with pytest.raises(InputError):
            brute_force_oracle(knapsackish(), {0: (0, 5)})

    def test_empty_range_rejected(self):
        with pytest.raises(InputError):
            brute_force_oracle(knapsackish(), {0: (3, 1), 1: (0, 5)})

    def test_combination_cap_enforced(self):
        with pytest.raises(InputError):
            brute_force_oracle(knapsackish(), {0: (0, 200), 1: (0, 200)})

    def test_infeasible_everywhere(self):
        lp = LinearProgram(
            objective=[1.0],
            A=[[1.0]],
            senses=[SENSE_GE],
            rhs=[9.0],
            lb=[0.0],
            ub=[3.0],
            integrality=[True],
        )
        vals, rep = brute_force_oracle(lp, {0: (0, 3)})
        assert vals is None and rep.status is SolveStatus.INFEASIBLE
