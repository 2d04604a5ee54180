"""Shared machinery for the test suite.

Everything here is plain library plumbing: loading bundled scenarios,
building catalogs with or without pruning, widening relocation path sets,
and solving a prepared case to verified optimality.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from aevplan.costmodel import Mode
from aevplan.pathsets import (
    PathCatalog,
    PathEnumerator,
    Strategy,
    build_catalog,
    relocation_pathsets,
)
from aevplan.planmodel import build_problem, verify_solution
from aevplan.scenarioharness import (
    PreparedCase,
    load_scenario,
    prepare_case,
    warmup_objective,
)
from aevplan.solvercore import SolveOptions, solve_mip

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Scenarios small enough to solve to proven optimality in seconds.  The
# 25-town scenario is deliberately absent: it is exercised build-only.
DESK_SCENARIOS = (
    "toy2",
    "duo2",
    "tri3",
    "relay3",
    "twin3",
    "diamond4",
    "ring5",
    "line3",
)

# <= 3 nodes and <= 2 demand pairs each: cheap enough for the exhaustive
# oracle.
ORACLE_SCENARIOS = ("toy2", "duo2", "tri3", "twin3", "relay3")

# <= 5 nodes, k <= 20: solvable with pruning disabled outright.
CUT_SCENARIOS = ("twin3", "diamond4", "ring5")

# The fixture whose demand is strongly one-directional early in the day, so
# banning daytime relocation forces a visibly larger fleet.
IMBALANCE_SCENARIO = "line3"


def load_case(name: str, overrides=()) -> PreparedCase:
    return prepare_case(load_scenario(FIXTURES / f"{name}.toml", overrides))


def zero_time_cost(case: PreparedCase) -> PreparedCase:
    """Copy of the case whose passengers' time is worth nothing.

    The warm-start cache must not leak across cost changes, hence the
    explicit fresh dict.
    """
    return replace(case, costs=case.costs.with_time_cost(0.0), _warmup={})


def catalog_for(
    case: PreparedCase,
    strategy: Strategy,
    mode: Mode,
    gap: float | None = None,
) -> PathCatalog:
    """Catalog exactly as run_strategy would build it (warm start included)."""
    scenario = case.scenario
    use_gap = scenario.gap if gap is None else gap
    warm = 0.0
    if strategy in (Strategy.OPTIMAL, Strategy.NO_RELOCATION) and use_gap > 0:
        warm = warmup_objective(case, mode)
    return build_catalog(
        case.expnet,
        case.demands,
        strategy,
        mode,
        case.veh,
        case.charger,
        case.costs,
        k=scenario.k,
        gap=use_gap,
        reference_objective=warm,
    )


def unpruned_catalog(case: PreparedCase, mode: Mode, k: int) -> PathCatalog:
    """Optimal-strategy catalog bypassing the dominance filter entirely."""
    enum_ = PathEnumerator(case.expnet, case.veh, case.charger, case.costs)
    loaded, counts = {}, {}
    for e in case.demands.entries:
        if e.total <= 0:
            continue
        od = (e.origin, e.destination)
        cands = enum_.k_cheapest(od, k, mode)
        loaded[od] = tuple(cands)
        counts[od] = len(cands)
    return PathCatalog(
        loaded=loaded,
        relocation=relocation_pathsets(
            case.expnet, case.veh, case.charger, case.costs
        ),
        strategy=Strategy.OPTIMAL,
        mode=mode,
        k=k,
        gap=0.0,
        candidate_counts=counts,
    )


def full_reloc_catalog(
    case: PreparedCase, base: PathCatalog, k: int = 4
) -> PathCatalog:
    """Widen a catalog's relocation set with multi-arc empty-move routes.

    Every ordered node pair contributes its k cheapest goods-cost routes
    (empty moves carry nobody, so goods costing applies); single-arc moves
    already present stay as they are.
    """
    enum_ = PathEnumerator(case.expnet, case.veh, case.charger, case.costs)
    reloc = {p.nodes: p for p in base.relocation.values()}
    n = case.expnet.n_nodes
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for p in enum_.k_cheapest((i, j), k, Mode.GOODS):
                reloc.setdefault(p.nodes, p)
    return replace(base, relocation=reloc)


def solve_verified(
    case: PreparedCase,
    catalog: PathCatalog,
    mode: Mode,
    strategy: Strategy = Strategy.OPTIMAL,
    window: int | None = None,
):
    """Build + solve one model, asserting feasibility and a clean audit."""
    kwargs = {}
    if window is not None:
        kwargs["relocation_window_start"] = window
    problem = build_problem(
        case.expnet,
        case.demands,
        catalog,
        mode,
        strategy,
        case.veh,
        case.charger,
        case.costs,
        **kwargs,
    )
    values, report = solve_mip(problem, case.scenario.solve_options())
    assert values is not None, f"solve failed: {report}"
    bad = verify_solution(problem, values)
    assert not bad, f"solution audit failed: {bad[:3]}"
    return problem, values, report


def rel_diff(a: float, b: float) -> float:
    """Relative difference with a unit floor, symmetric enough for tests."""
    return abs(a - b) / max(1.0, abs(a), abs(b))


# --- acceptance reporting ---------------------------------------------------

ACCEPTANCE_LINES: list[tuple[int, str]] = []


def record_criterion(num: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"criterion {num:2d} {name:<44s} {status}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES.append((num, line))
    print(line)
