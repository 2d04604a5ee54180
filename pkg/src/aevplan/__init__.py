"""Joint fleet sizing and charging-station planning for autonomous electric
vehicles on intercity road networks.

The pipeline: expand the road network to every node pair reachable on one
charge (netcore), attach demand (demandgen) and unit costs (costmodel),
enumerate and prune candidate paths per OD pair (pathsets), assemble the
time-indexed MILP (planmodel), solve it deterministically (solvercore), and
drive everything from scenario files (scenarioharness, cli).
"""

from .costmodel import (
    ChargerSpec,
    CostParams,
    Mode,
    VehicleSpec,
    capital_recovery,
    derive_unit_costs,
)
from .demandgen import DemandSet, gravity_demands, load_demands, save_demands
from .errors import AevPlanError, InfeasibilityError, InputError, ParseError
from .netcore import (
    ExpandedNetwork,
    Network,
    expand_network,
    load_network,
    shortest_path_lengths,
)
from .pathsets import (
    Path,
    PathCatalog,
    Strategy,
    build_catalog,
    delta_cost,
    k_cheapest_paths,
    prune_loaded,
)
from .planmodel import (
    PlanProblem,
    PlanSolution,
    build_problem,
    cost_breakdown,
    decompose_solution,
    export_lp,
    verify_solution,
)
from .scenarioharness import (
    Scenario,
    compare_strategies,
    load_scenario,
    prepare_case,
    run_strategy,
    sweep,
    warmup_objective,
)
from .solvercore import (
    SolveOptions,
    SolveReport,
    SolveStatus,
    brute_force_oracle,
    round_up_heuristic,
    solve_lp,
    solve_mip,
)

__version__ = "0.1.0"

__all__ = [
    "AevPlanError",
    "ChargerSpec",
    "CostParams",
    "DemandSet",
    "ExpandedNetwork",
    "InfeasibilityError",
    "InputError",
    "Mode",
    "Network",
    "ParseError",
    "Path",
    "PathCatalog",
    "PlanProblem",
    "PlanSolution",
    "Scenario",
    "SolveOptions",
    "SolveReport",
    "SolveStatus",
    "Strategy",
    "VehicleSpec",
    "build_catalog",
    "build_problem",
    "brute_force_oracle",
    "capital_recovery",
    "compare_strategies",
    "cost_breakdown",
    "decompose_solution",
    "delta_cost",
    "derive_unit_costs",
    "expand_network",
    "export_lp",
    "gravity_demands",
    "k_cheapest_paths",
    "load_demands",
    "load_network",
    "load_scenario",
    "prepare_case",
    "prune_loaded",
    "round_up_heuristic",
    "run_strategy",
    "save_demands",
    "shortest_path_lengths",
    "solve_lp",
    "solve_mip",
    "sweep",
    "verify_solution",
    "warmup_objective",
]
