"""Scenario files and end-to-end planning runs.

A scenario is a TOML file gathering every input of one planning case:

    label = "two-town toy"            # optional

    [network]
    file = "toy2.net"                 # paths are relative to the scenario file

    [demand]                          # either a file ...
    file = "toy2.dem"
    # ... or a gravity synthesis:
    # daily_total = 15000.0
    # beta = 2.0
    # peak_hour = 8                   # omit for a flat profile
    # peak_share = 0.15

    [vehicle]
    battery_kwh = 75.0
    speed_kmh = 100.0
    reserve_kwh = 15.0
    # fuel_eff_kwh_per_km = 0.2       # default derives from battery size

    [charger]
    power_kw = 100.0
    efficiency = 0.92
    lifetime_years = 15

    [costs]
    # time_cost, maintenance_cost, discount_rate, lifetime_years,
    # charger_margin, aev_cost, charger_cost  (all optional overrides)

    [plan]
    mode = "passenger"                # or "goods"
    strategy = "optimal"              # mintime | minoperation | norelocation | optimal
    horizon = 24
    k = 150
    gap = 1e-4
    # range_km = 100.0                # default derives from the battery
    relocation_window_start = 22      # NoRelocation: empty moves depart >= this hour
    warmup = "auto"                   # auto | exact | heuristic

    [solver]
    backend = "auto"                  # auto | dense | highs
    rel_tol = 1e-6

    [output]
    dir = "out"

Derived quantities (vehicle cost, consumption, range, charger cost) are
recomputed from the swept parameter during sweeps; an explicit range_km
override is dropped when the battery itself is swept.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .costmodel import ChargerSpec, CostParams, Mode, VehicleSpec, derive_unit_costs
from .demandgen import (
    DemandSet,
    flat_profile,
    gravity_demands,
    load_demands,
    peaked_profile,
)
from .errors import InfeasibilityError, InputError, ParseError
from .netcore import ExpandedNetwork, Network, expand_network, load_network
from .pathsets import PathCatalog, Strategy, build_catalog
from .planmodel import (
    PlanProblem,
    PlanSolution,
    build_problem,
    decompose_solution,
    verify_solution,
)
from .solvercore import (
    SolveOptions,
    SolveReport,
    SolveStatus,
    round_up_heuristic,
    solve_lp,
    solve_mip,
)

log = logging.getLogger(__name__)

COMPARE_STRATEGIES = (
    Strategy.MIN_TIME,
    Strategy.MIN_OPERATION,
    Strategy.NO_RELOCATION,
    Strategy.OPTIMAL,
)
COMPARE_MODES = (Mode.PASSENGER, Mode.GOODS)

SWEEP_PARAMS = {
    "battery_kwh": ("vehicle", "battery_kwh"),
    "power_kw": ("charger", "power_kw"),
    "speed_kmh": ("vehicle", "speed_kmh"),
}

_WARMUP_AUTO_EXACT_LIMIT = 2000  # max variables for an exact warm-up solve


@dataclass
class Scenario:
    """Parsed scenario: raw TOML dict plus the resolved base directory."""

    raw: dict
    base_dir: Path
    label: str = ""

    def section(self, name: str) -> dict:
        sec = self.raw.get(name, {})
        if not isinstance(sec, dict):
            raise InputError(f"scenario section [{name}] must be a table")
        return sec

    def get(self, section: str, key: str, default=None):
        return self.section(section).get(key, default)

    # frequently used knobs
    @property
    def mode(self) -> Mode:
        return Mode.parse(self.get("plan", "mode", "passenger"))

    @property
    def strategy(self) -> Strategy:
        return Strategy.parse(self.get("plan", "strategy", "optimal"))

    @property
    def horizon(self) -> int:
        return int(self.get("plan", "horizon", 24))

    @property
    def k(self) -> int:
        return int(self.get("plan", "k", 150))

    @property
    def gap(self) -> float:
        return float(self.get("plan", "gap", 1e-4))

    @property
    def out_dir(self) -> Path:
        return self.base_dir / str(self.get("output", "dir", "out"))

    def solve_options(self) -> SolveOptions:
        sec = self.section("solver")
        return SolveOptions(
            rel_tol=float(sec.get("rel_tol", 1e-6)),
            backend=str(sec.get("backend", "auto")),
            node_limit=(
                int(sec["node_limit"]) if "node_limit" in sec else None
            ),
            time_limit=(
                float(sec["time_limit"]) if "time_limit" in sec else None
            ),
        )


def _coerce(text: str):
    low = text.strip()
    for conv in (int, float):
        try:
            return conv(low)
        except ValueError:
            pass
    if low.lower() in ("true", "false"):
        return low.lower() == "true"
    return low.strip("\"'")


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply "section.key=value" strings onto a copy of the raw dict."""
    out = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise InputError(f"override {item!r} is not of the form section.key=value")
        dotted, value = item.split("=", 1)
        parts = dotted.strip().split(".")
        if len(parts) != 2:
            raise InputError(f"override key {dotted!r} must be section.key")
        section, key = parts
        out.setdefault(section, {})[key] = _coerce(value)
    return out


def load_scenario(path, overrides=()) -> Scenario:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise InputError(f"scenario file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(str(exc), path=str(path)) from None
    raw = apply_overrides(raw, overrides)
    return Scenario(raw=raw, base_dir=path.parent, label=str(raw.get("label", path.stem)))


@dataclass
class PreparedCase:
    """Scenario with every input loaded, derived and validated."""

    scenario: Scenario
    net: Network
    expnet: ExpandedNetwork
    demands: DemandSet
    veh: VehicleSpec
    charger: ChargerSpec
    costs: CostParams
    range_km: float
    _warmup: dict = field(default_factory=dict, repr=False)

    @property
    def horizon(self) -> int:
        return self.demands.horizon_hours


def prepare_case(scenario: Scenario) -> PreparedCase:
    net_file = scenario.get("network", "file")
    if not net_file:
        raise InputError("scenario needs [network] file = ...")
    net = load_network(scenario.base_dir / str(net_file))

    vsec = scenario.section("vehicle")
    veh = VehicleSpec(
        battery_kwh=float(vsec.get("battery_kwh", 75.0)),
        speed_kmh=float(vsec.get("speed_kmh", 100.0)),
        reserve_kwh=float(vsec.get("reserve_kwh", 15.0)),
        fuel_eff_kwh_per_km=float(vsec.get("fuel_eff_kwh_per_km", 0.0)),
    )
    csec = scenario.section("charger")
    charger = ChargerSpec(
        power_kw=float(csec.get("power_kw", 100.0)),
        efficiency=float(csec.get("efficiency", 0.92)),
        lifetime_years=float(csec.get("lifetime_years", 15)),
    )
    ksec = scenario.section("costs")
    costs = derive_unit_costs(
        veh.battery_kwh,
        charger,
        rate=float(ksec.get("discount_rate", 0.08)),
        years=float(ksec.get("lifetime_years", 15)),
        time_cost=float(ksec.get("time_cost", 22.62)),
        maintenance_cost=float(ksec.get("maintenance_cost", 0.025)),
        charger_margin=float(ksec.get("charger_margin", 1.2)),
        aev_cost=(float(ksec["aev_cost"]) if "aev_cost" in ksec else None),
        charger_cost=(
            float(ksec["charger_cost"]) if "charger_cost" in ksec else None
        ),
    )
    range_km = float(scenario.get("plan", "range_km", 0.0)) or veh.range_km
    expnet = expand_network(net, range_km)

    dsec = scenario.section("demand")
    horizon = scenario.horizon
    if "file" in dsec:
        demands = load_demands(scenario.base_dir / str(dsec["file"]), net)
        if demands.horizon_hours != horizon:
            raise InputError(
                f"demand file horizon {demands.horizon_hours} != plan horizon "
                f"{horizon}"
            )
    elif "daily_total" in dsec:
        if "peak_hour" in dsec:
            profile = peaked_profile(
                horizon,
                int(dsec["peak_hour"]),
                float(dsec.get("peak_share", 0.15)),
            )
        else:
            profile = flat_profile(horizon)
        demands = gravity_demands(
            net,
            float(dsec["daily_total"]),
            profile,
            beta=float(dsec.get("beta", 2.0)),
        )
    else:
        raise InputError("scenario needs [demand] file=... or daily_total=...")
    return PreparedCase(
        scenario=scenario,
        net=net,
        expnet=expnet,
        demands=demands,
        veh=veh,
        charger=charger,
        costs=costs,
        range_km=range_km,
    )


def warmup_objective(case: PreparedCase, mode: Mode) -> float:
    """Feasible objective of the single-cheapest-path restriction.

    Used to scale the pruning threshold.  Small models are solved exactly;
    large ones take the LP relaxation plus the round-up heuristic (still a
    valid feasible objective).  Results are cached per mode.
    """
    if mode in case._warmup:
        return case._warmup[mode]
    scenario = case.scenario
    options = scenario.solve_options()
    catalog = build_catalog(
        case.expnet,
        case.demands,
        Strategy.MIN_OPERATION,
        mode,
        case.veh,
        case.charger,
        case.costs,
    )
    problem = build_problem(
        case.expnet,
        case.demands,
        catalog,
        mode,
        Strategy.MIN_OPERATION,
        case.veh,
        case.charger,
        case.costs,
    )
    how = str(scenario.get("plan", "warmup", "auto"))
    if how == "auto":
        how = "exact" if problem.n_vars <= _WARMUP_AUTO_EXACT_LIMIT else "heuristic"
    if how == "exact":
        values, report = solve_mip(problem, options)
        if values is None:
            raise InfeasibilityError(
                f"warm-up problem infeasible ({report.status.value})"
            )
        obj = float(report.objective)
    elif how == "heuristic":
        values, report = solve_lp(problem, options)
        if values is None:
            raise InfeasibilityError(
                f"warm-up LP infeasible ({report.status.value})"
            )
        rounded = round_up_heuristic(problem, values, options)
        if rounded is None:
            raise InfeasibilityError("warm-up rounding failed")
        obj = rounded[1]
    else:
        raise InputError(f"unknown warmup mode {how!r}")
    log.info("warm-up objective (%s, %s): %.6g", mode.value, how, obj)
    case._warmup[mode] = obj
    return obj


@dataclass
class RunResult:
    """One solved strategy/mode combination plus its bookkeeping."""

    mode: Mode
    strategy: Strategy
    problem: PlanProblem
    catalog: PathCatalog
    report: SolveReport
    solution: PlanSolution | None
    warmup_obj: float | None
    build_seconds: float
    violations: list

    @property
    def status(self) -> SolveStatus:
        return self.report.status

    def variable_counts(self) -> dict:
        T = self.problem.horizon
        return {
            "loaded_candidates": self.catalog.candidate_path_count * T,
            "loaded_kept": self.catalog.kept_path_count * T,
            "relocation": len(self.problem.reloc_arcs) * T,
            "total": self.problem.n_vars,
            "rows": self.problem.n_rows,
        }

    def to_record(self) -> dict:
        rec = {
            "mode": self.mode.value,
            "strategy": self.strategy.value,
            "status": self.report.status.value,
            "objective": self.report.objective,
            "best_bound": self.report.best_bound,
            "rel_gap": self.report.rel_gap,
            "nodes": self.report.nodes,
            "warmup_objective": self.warmup_obj,
            "variables": self.variable_counts(),
            "build_seconds": round(self.build_seconds, 3),
            "solve_seconds": round(self.report.wall_time, 3),
        }
        if self.solution is not None:
            s = self.solution
            rec.update(
                fleet_size=s.fleet_size,
                chargers=list(s.chargers),
                chargers_total=s.total_chargers,
                cost_breakdown={
                    "investment": s.breakdown.investment,
                    "fleet_capital": s.breakdown.fleet_capital,
                    "charger_capital": s.breakdown.charger_capital,
                    "driving_time": s.breakdown.driving_time,
                    "charging_time": s.breakdown.charging_time,
                    "electricity": s.breakdown.electricity,
                    "maintenance": s.breakdown.maintenance,
                    "total": s.breakdown.total,
                },
            )
        return rec

    def format_text(self) -> str:
        net = self.problem.expnet.base
        lines = [
            f"strategy {self.strategy.value} / mode {self.mode.value}: "
            f"{self.report.status.value}",
            f"  variables: {self.variable_counts()}",
        ]
        if self.solution is None:
            return "\n".join(lines)
        s = self.solution
        lines += [
            f"  objective      : {s.objective:,.2f} $/yr",
            f"  fleet size     : {s.fleet_size}",
            "  chargers       : "
            + ", ".join(
                f"{net.name_of(i)}={c}" for i, c in enumerate(s.chargers) if c
            )
            + f" (total {s.total_chargers})",
            f"  investment     : {s.breakdown.investment:,.2f}",
            f"  driving time   : {s.breakdown.driving_time:,.2f}",
            f"  charging time  : {s.breakdown.charging_time:,.2f}",
            f"  electricity    : {s.breakdown.electricity:,.2f}",
            f"  maintenance    : {s.breakdown.maintenance:,.2f}",
        ]
        return "\n".join(lines)


def run_strategy(
    case: PreparedCase,
    strategy: Strategy | None = None,
    mode: Mode | None = None,
) -> RunResult:
    """Build the catalog and model for one strategy/mode and solve it."""
    scenario = case.scenario
    strategy = strategy or scenario.strategy
    mode = mode or scenario.mode
    options = scenario.solve_options()
    t0 = time.perf_counter()
    warmup = None
    gap = scenario.gap
    if strategy in (Strategy.OPTIMAL, Strategy.NO_RELOCATION) and gap > 0:
        warmup = warmup_objective(case, mode)
    catalog = build_catalog(
        case.expnet,
        case.demands,
        strategy,
        mode,
        case.veh,
        case.charger,
        case.costs,
        k=scenario.k,
        gap=gap,
        reference_objective=warmup or 0.0,
    )
    problem = build_problem(
        case.expnet,
        case.demands,
        catalog,
        mode,
        strategy,
        case.veh,
        case.charger,
        case.costs,
        relocation_window_start=int(
            scenario.get("plan", "relocation_window_start", 22)
        ),
    )
    build_seconds = time.perf_counter() - t0
    counts = catalog.candidate_path_count, catalog.kept_path_count
    log.info(
        "catalog %s/%s: %d candidate paths -> %d kept; model %d vars x %d rows",
        strategy.value, mode.value, counts[0], counts[1],
        problem.n_vars, problem.n_rows,
    )
    values, report = solve_mip(problem, options)
    solution = None
    violations: list = []
    if values is not None:
        violations = verify_solution(problem, values)
        if violations:
            report.status = SolveStatus.ERROR
            report.message = f"{len(violations)} violated constraints"
            log.error("solution verification failed: %s", violations[:5])
        else:
            solution = decompose_solution(problem, values)
    return RunResult(
        mode=mode,
        strategy=strategy,
        problem=problem,
        catalog=catalog,
        report=report,
        solution=solution,
        warmup_obj=warmup,
        build_seconds=build_seconds,
        violations=violations,
    )


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

_COMPARE_HEADER = [
    "mode",
    "strategy",
    "status",
    "fleet_size",
    "chargers_total",
    "investment",
    "driving_time",
    "charging_time",
    "electricity",
    "maintenance",
    "total",
]

_SWEEP_HEADER = [
    "parameter",
    "value",
    "status",
    "fleet_size",
    "chargers_total",
    "investment",
    "driving_time",
    "charging_time",
    "electricity",
    "maintenance",
    "total",
]


def _money(v: float | None) -> str:
    return "" if v is None else f"{v:.6f}"


def _result_cells(result: RunResult | None, error: str = "") -> list[str]:
    if result is None or result.solution is None:
        status = error or (result.report.status.value if result else "error")
        return [status] + [""] * 8
    s = result.solution
    b = s.breakdown
    return [
        result.report.status.value,
        str(s.fleet_size),
        str(s.total_chargers),
        _money(b.investment),
        _money(b.driving_time),
        _money(b.charging_time),
        _money(b.electricity),
        _money(b.maintenance),
        _money(b.total),
    ]


def compare_strategies(case: PreparedCase) -> tuple[list[list[str]], str]:
    """All four strategies under both modes; returns (rows, csv text).

    A failing combination (infeasible, solver trouble) fills its row with a
    status and leaves the numbers blank; remaining rows are still produced.
    """
    rows = []
    for mode in COMPARE_MODES:
        for strategy in COMPARE_STRATEGIES:
            try:
                result = run_strategy(case, strategy, mode)
                cells = _result_cells(result)
            except InfeasibilityError as exc:
                log.warning("%s/%s infeasible: %s", mode.value, strategy.value, exc)
                cells = ["infeasible"] + [""] * 8
            except InputError as exc:
                log.error("%s/%s failed: %s", mode.value, strategy.value, exc)
                cells = ["error"] + [""] * 8
            rows.append([mode.value, strategy.value] + cells)
    return rows, _csv_text(_COMPARE_HEADER, rows)


def sweep(scenario: Scenario, param: str, values) -> tuple[list[list[str]], str]:
    """Re-run the scenario for each value of one swept parameter.

    Derived quantities are recomputed per point (vehicle cost, consumption
    and range from the battery; charger cost from power; travel times from
    speed).  Infeasible points are recorded and the sweep continues.
    """
    if param not in SWEEP_PARAMS:
        raise InputError(
            f"unknown sweep parameter {param!r}; choose from "
            f"{sorted(SWEEP_PARAMS)}"
        )
    section, key = SWEEP_PARAMS[param]
    rows = []
    for value in values:
        raw = copy.deepcopy(scenario.raw)
        raw.setdefault(section, {})[key] = float(value)
        if param == "battery_kwh":
            # range must re-derive from the swept battery
            raw.get("plan", {}).pop("range_km", None)
        point = Scenario(raw=raw, base_dir=scenario.base_dir, label=scenario.label)
        try:
            case = prepare_case(point)
            result = run_strategy(case)
            cells = _result_cells(result)
        except InfeasibilityError:
            cells = ["infeasible"] + [""] * 8
        except InputError as exc:
            log.error("sweep point %s=%s failed: %s", param, value, exc)
            cells = ["error"] + [""] * 8
        rows.append([param, f"{float(value):g}"] + cells)
    return rows, _csv_text(_SWEEP_HEADER, rows)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_report(out_dir: Path, name: str, text: str) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / name
    with open(target, "w", encoding="utf-8") as fh:
        fh.write(text)
    return target


def result_record_json(result: RunResult) -> str:
    return json.dumps(result.to_record(), indent=2, sort_keys=True) + "\n"
