"""Model assembly, solution auditing, cost splitting, and LP export."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aevplan.costmodel import (
    DAYS_PER_YEAR,
    ChargerSpec,
    Mode,
    VehicleSpec,
    derive_unit_costs,
)
from aevplan.demandgen import DemandEntry, DemandSet
from aevplan.errors import InfeasibilityError, InputError
from aevplan.netcore import Arc, Network, Node, expand_network
from aevplan.pathsets import Strategy, build_catalog
from aevplan.planmodel import (
    build_problem,
    cost_breakdown,
    decompose_solution,
    export_lp,
    verify_solution,
)
from aevplan.solvercore import SolveOptions, round_up_heuristic, solve_lp, solve_mip
from helpers import catalog_for, load_case

TOY_BLOCKS = {
    "fleet": 1,
    "chargers": 2,
    "loaded": 24,       # 1 pair x 1 kept path x 24 hours
    "relocation": 48,   # 2 expanded arcs x 24 hours
    "parking": 48,      # 2 nodes x 24 hours
    "initial_parking": 2,
}


@pytest.fixture(scope="module")
def toy_problem():
    case = load_case("toy2")
    catalog = catalog_for(case, Strategy.OPTIMAL, Mode.PASSENGER)
    problem = build_problem(
        case.expnet, case.demands, catalog, Mode.PASSENGER, Strategy.OPTIMAL,
        case.veh, case.charger, case.costs,
    )
    return case, problem


@pytest.fixture(scope="module")
def toy_solved(toy_problem):
    case, problem = toy_problem
    values, report = solve_mip(problem, SolveOptions())
    assert values is not None
    return case, problem, values, report


class TestAssembly:
    def test_two_town_variable_blocks(self, toy_problem):
        _, problem = toy_problem
        assert problem.index.block_sizes() == TOY_BLOCKS
        assert problem.n_vars == sum(TOY_BLOCKS.values()) == 125

    def test_only_fleet_and_plug_counts_are_integer(self, toy_problem):
        _, problem = toy_problem
        idx = problem.index
        ints = set(np.nonzero(problem.integrality)[0])
        assert ints == {idx.x} | {idx.y(i) for i in range(idx.n_nodes)}

    def test_objective_coefficients(self, toy_problem):
        case, problem = toy_problem
        idx, costs = problem.index, case.costs
        assert problem.objective[idx.x] == pytest.approx(
            costs.capital_recovery * costs.aev_cost, rel=1e-12
        )
        for i in range(idx.n_nodes):
            assert problem.objective[idx.y(i)] == pytest.approx(
                costs.capital_recovery * costs.charger_cost, rel=1e-12
            )
        for pi, od in enumerate(idx.pairs):
            for q, path in enumerate(problem.catalog.loaded[od]):
                for t in range(idx.horizon):
                    assert problem.objective[idx.loaded(pi, q, t)] == pytest.approx(
                        DAYS_PER_YEAR * path.op_cost(Mode.PASSENGER), rel=1e-12
                    )
        for a, key in enumerate(problem.reloc_arcs):
            path = problem.catalog.relocation[key]
            assert problem.objective[idx.reloc(a, 0)] == pytest.approx(
                DAYS_PER_YEAR * path.op_cost_goods, rel=1e-12
            )

    def test_row_families_present(self, toy_problem):
        _, problem = toy_problem
        fams = {label.split("_")[0] for label in problem.row_labels}
        assert fams == {"dem", "park", "restore", "fleet", "chg"}
        T, n = problem.horizon, problem.index.n_nodes
        n_pairs = len(problem.index.pairs)
        assert problem.n_rows == n_pairs * T + n * T + n + T + n * T

    def test_var_names_are_unique_and_ordered(self, toy_problem):
        _, problem = toy_problem
        names = problem.var_names()
        assert len(names) == len(set(names)) == problem.n_vars
        assert names[0] == "x"
        assert names[problem.index.y(0)] == "y_0"
        assert names[problem.index.loaded(0, 0, 0)] == "f_0_0_0"

    def test_missing_or_empty_path_sets_rejected(self):
        case = load_case("toy2")
        catalog = catalog_for(case, Strategy.OPTIMAL, Mode.PASSENGER)
        od = next(iter(catalog.loaded))
        hollow = dict(catalog.loaded)
        hollow[od] = ()
        import dataclasses

        with pytest.raises(InfeasibilityError):
            build_problem(
                case.expnet, case.demands,
                dataclasses.replace(catalog, loaded=hollow),
                Mode.PASSENGER, Strategy.OPTIMAL,
                case.veh, case.charger, case.costs,
            )
        gone = dict(catalog.loaded)
        del gone[od]
        with pytest.raises(InputError):
            build_problem(
                case.expnet, case.demands,
                dataclasses.replace(catalog, loaded=gone),
                Mode.PASSENGER, Strategy.OPTIMAL,
                case.veh, case.charger, case.costs,
            )


class TestNoRelocationWindow:
    def test_daytime_departures_forced_to_zero(self):
        case = load_case("duo2")  # T = 12
        catalog = catalog_for(case, Strategy.NO_RELOCATION, Mode.PASSENGER)
        problem = build_problem(
            case.expnet, case.demands, catalog, Mode.PASSENGER,
            Strategy.NO_RELOCATION, case.veh, case.charger, case.costs,
            relocation_window_start=6,
        )
        idx = problem.index
        for a in range(len(problem.reloc_arcs)):
            for t in range(problem.horizon):
                if t < 6:
                    assert problem.ub[idx.reloc(a, t)] == 0.0
                else:
                    assert np.isinf(problem.ub[idx.reloc(a, t)])

    def test_other_strategies_leave_relocation_free(self, toy_problem):
        _, problem = toy_problem
        idx = problem.index
        assert all(
            np.isinf(problem.ub[idx.reloc(a, t)])
            for a in range(len(problem.reloc_arcs))
            for t in range(problem.horizon)
        )


class TestGoodsEqualsZeroTimeCost:
    def test_identical_matrices_on_a_shared_catalog(self):
        case = load_case("twin3")
        costs0 = case.costs.with_time_cost(0.0)
        catalog = build_catalog(
            case.expnet, case.demands, Strategy.OPTIMAL, Mode.PASSENGER,
            case.veh, case.charger, costs0, k=case.scenario.k, gap=0.0,
        )
        args = (case.expnet, case.demands, catalog)
        tail = (case.veh, case.charger, costs0)
        p_pax = build_problem(*args, Mode.PASSENGER, Strategy.OPTIMAL, *tail)
        p_goods = build_problem(*args, Mode.GOODS, Strategy.OPTIMAL, *tail)
        assert np.array_equal(p_pax.objective, p_goods.objective)
        assert np.array_equal(p_pax.rhs, p_goods.rhs)
        assert (p_pax.A != p_goods.A).nnz == 0


class TestSolutionAudit:
    def test_clean_solve_has_no_violations(self, toy_solved):
        _, problem, values, _ = toy_solved
        assert verify_solution(problem, values) == []

    def test_detects_row_bound_and_integrality_breaks(self, toy_solved):
        _, problem, values, _ = toy_solved
        idx = problem.index

        v = values.copy()
        v[idx.loaded(0, 0, 0)] += 0.5  # oversatisfies an equality demand row
        kinds = {w.kind for w in verify_solution(problem, v)}
        assert "row" in kinds

        v = values.copy()
        v[idx.x] = -1.0
        out = verify_solution(problem, v)
        assert any(w.kind == "bound" and w.label == "x" for w in out)

        v = values.copy()
        v[idx.y(0)] += 0.25
        out = verify_solution(problem, v)
        assert any(w.kind == "integrality" for w in out)

    def test_shape_mismatch_rejected(self, toy_solved):
        _, problem, values, _ = toy_solved
        with pytest.raises(InputError):
            verify_solution(problem, values[:-1])


class TestReporting:
    def test_breakdown_total_equals_objective(self, toy_solved):
        _, problem, values, report = toy_solved
        b = cost_breakdown(problem, values)
        assert b.total == pytest.approx(report.objective, rel=1e-9)
        assert b.investment == pytest.approx(
            b.fleet_capital + b.charger_capital, rel=1e-12
        )
        assert min(
            b.fleet_capital, b.charger_capital, b.electricity, b.maintenance
        ) >= 0.0

    def test_goods_breakdown_prices_no_time(self):
        case = load_case("toy2")
        catalog = catalog_for(case, Strategy.OPTIMAL, Mode.GOODS)
        problem = build_problem(
            case.expnet, case.demands, catalog, Mode.GOODS, Strategy.OPTIMAL,
            case.veh, case.charger, case.costs,
        )
        values, report = solve_mip(problem, SolveOptions())
        b = cost_breakdown(problem, values)
        assert b.driving_time == 0.0 and b.charging_time == 0.0
        assert b.total == pytest.approx(report.objective, rel=1e-9)

    def test_decompose_solution_roundtrip(self, toy_solved):
        _, problem, values, report = toy_solved
        sol = decompose_solution(problem, values)
        idx = problem.index
        assert sol.fleet_size == int(round(values[idx.x]))
        assert len(sol.chargers) == idx.n_nodes
        assert sol.total_chargers == sum(sol.chargers)
        assert sol.objective == pytest.approx(report.objective, rel=1e-12)
        od = idx.pairs[0]
        flows = sol.loaded[od]
        assert flows.shape == (len(problem.catalog.loaded[od]), problem.horizon)
        assert flows[0, 0] == values[idx.loaded(0, 0, 0)]
        assert sol.parking.shape == (idx.n_nodes, problem.horizon)
        drive = sol.drive_counts(problem)
        assert drive.shape == (problem.horizon,)
        assert np.all(drive >= -1e-9)
        assert np.max(drive) <= sol.fleet_size + 1e-9

    def test_breakdown_matches_solution_decomposition(self, toy_solved):
        _, problem, values, _ = toy_solved
        sol = decompose_solution(problem, values)
        b = cost_breakdown(problem, values)
        assert sol.breakdown == b


class TestLpExport:
    def test_sections_and_determinism(self, toy_solved):
        _, problem, _, _ = toy_solved
        text = export_lp(problem)
        assert text == export_lp(problem)
        for token in ("Minimize", "Subject To", "Generals", "End"):
            assert token in text
        assert " obj: " in text
        assert "f_0_0_0" in text and "y_1" in text
        assert "np." not in text  # plain float literals only

    def test_fixed_bounds_exported_for_no_relocation(self):
        case = load_case("duo2")
        catalog = catalog_for(case, Strategy.NO_RELOCATION, Mode.PASSENGER)
        problem = build_problem(
            case.expnet, case.demands, catalog, Mode.PASSENGER,
            Strategy.NO_RELOCATION, case.veh, case.charger, case.costs,
            relocation_window_start=6,
        )
        text = export_lp(problem)
        assert "Bounds" in text
        assert " r_0_0 <= 0.0" in text


# --- property: LP relaxation <= MIP <= ceiling-rounded LP --------------------

RING = Network(
    nodes=(Node(0, 1.0, 0.12), Node(1, 1.0, 0.18)),
    arcs=(Arc(0, 1, 120.0), Arc(1, 0, 120.0)),
    names=("A", "B"),
)
RING_EXP = expand_network(RING, 328.0)
VEH = VehicleSpec(75.0, 100.0)
CHARGER = ChargerSpec(100.0)
COSTS = derive_unit_costs(75.0, CHARGER)


@settings(max_examples=12, deadline=None)
@given(
    vols=st.lists(
        st.floats(0.0, 3.0).map(lambda v: round(v, 2)), min_size=6, max_size=6
    ),
    back=st.integers(0, 2),
)
def test_sandwich_bound_on_random_demand(vols, back):
    if sum(vols) == 0.0:
        vols = list(vols)
        vols[0] = 1.0
    demands = DemandSet(
        horizon_hours=6,
        entries=(
            DemandEntry(0, 1, tuple(vols)),
            DemandEntry(1, 0, tuple(vols[back:] + vols[:back])),
        ),
    )
    catalog = build_catalog(
        RING_EXP, demands, Strategy.OPTIMAL, Mode.PASSENGER,
        VEH, CHARGER, COSTS, k=3, gap=0.0,
    )
    problem = build_problem(
        RING_EXP, demands, catalog, Mode.PASSENGER, Strategy.OPTIMAL,
        VEH, CHARGER, COSTS,
    )
    lp_vals, lp_rep = solve_lp(problem)
    assert lp_vals is not None
    mip_vals, mip_rep = solve_mip(problem)
    assert mip_vals is not None
    rounded = round_up_heuristic(problem, lp_vals)
    assert rounded is not None
    _, round_obj, gap = rounded
    tol = 1e-6 * max(1.0, abs(mip_rep.objective))
    assert lp_rep.objective <= mip_rep.objective + tol
    assert mip_rep.objective <= round_obj + tol
    assert gap >= -1e-12
