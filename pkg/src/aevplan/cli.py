"""Command-line interface.

Subcommands: expand, demand, plan, compare, sweep, export-lp.
Exit codes: 0 success, 1 infeasible planning problem, 2 bad input.
The default output directory is taken from --out, then $AEVPLAN_OUT, then
the scenario's [output] dir, then ./out.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .costmodel import Mode
from .demandgen import flat_profile, gravity_demands, peaked_profile, save_demands
from .errors import InfeasibilityError, InputError
from .netcore import expand_network, format_expansion, load_network
from .pathsets import Strategy
from .planmodel import build_problem, export_lp
from .pathsets import build_catalog
from .scenarioharness import (
    Scenario,
    compare_strategies,
    load_scenario,
    prepare_case,
    result_record_json,
    run_strategy,
    sweep,
    warmup_objective,
    write_report,
)
from .solvercore import SolveStatus

OUT_ENV = "AEVPLAN_OUT"

log = logging.getLogger(__name__)


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="scenario TOML file")
    p.add_argument("--network", help="override the scenario's network file")
    p.add_argument("--demands", help="override the scenario's demand file")
    p.add_argument("--range", type=float, dest="range_km", help="range override [km]")
    p.add_argument("--mode", help="passenger | goods")
    p.add_argument("--strategy", help="mintime | minoperation | norelocation | optimal")
    p.add_argument("--k", type=int, help="candidate paths per OD pair")
    p.add_argument("--gap", type=float, help="pruning gap fraction")
    p.add_argument("--alpha", type=float, help="charger sizing margin")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override any scenario entry (repeatable)",
    )
    p.add_argument("--out", help="output directory")


def _scenario_from_args(args) -> Scenario:
    overrides = list(args.overrides)
    if args.network:
        overrides.append(f"network.file={args.network}")
    if args.demands:
        overrides.append(f"demand.file={args.demands}")
    if args.range_km is not None:
        overrides.append(f"plan.range_km={args.range_km}")
    if args.mode:
        overrides.append(f"plan.mode={args.mode}")
    if args.strategy:
        overrides.append(f"plan.strategy={args.strategy}")
    if args.k is not None:
        overrides.append(f"plan.k={args.k}")
    if args.gap is not None:
        overrides.append(f"plan.gap={args.gap}")
    if args.alpha is not None:
        overrides.append(f"costs.charger_margin={args.alpha}")
    return load_scenario(args.scenario, overrides)


def _out_dir(args, scenario: Scenario | None = None) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    if scenario is not None:
        return scenario.out_dir
    return Path("out")


def _cmd_expand(args) -> int:
    net = load_network(args.network)
    print(format_expansion(expand_network(net, args.range_km)))
    return 0


def _cmd_demand(args) -> int:
    net = load_network(args.network)
    if args.peak_hour is not None:
        profile = peaked_profile(args.horizon, args.peak_hour, args.peak_share)
    else:
        profile = flat_profile(args.horizon)
    demands = gravity_demands(net, args.daily_total, profile, beta=args.beta)
    save_demands(demands, args.out, net)
    print(
        f"wrote {len(demands.entries)} OD pairs, "
        f"{demands.total_trips:.1f} trips/day "
        f"(peak hour {demands.peak_hour_trips():.1f}) -> {args.out}"
    )
    if demands.skipped_pairs:
        print(f"skipped {len(demands.skipped_pairs)} disconnected pairs")
    return 0


def _cmd_plan(args) -> int:
    scenario = _scenario_from_args(args)
    case = prepare_case(scenario)
    result = run_strategy(case)
    out = _out_dir(args, scenario)
    stem = f"plan_{result.strategy.value}_{result.mode.value}"
    write_report(out, stem + ".json", result_record_json(result))
    write_report(out, stem + ".txt", result.format_text() + "\n")
    print(result.format_text())
    print(f"reports: {out / (stem + '.json')}")
    if result.solution is None:
        if result.report.status is SolveStatus.INFEASIBLE:
            raise InfeasibilityError("planning problem is infeasible")
        raise InputError(f"solve failed: {result.report.status.value}")
    return 0


def _cmd_compare(args) -> int:
    scenario = _scenario_from_args(args)
    case = prepare_case(scenario)
    rows, csv_text = compare_strategies(case)
    out = _out_dir(args, scenario)
    target = write_report(out, "compare.csv", csv_text)
    print(csv_text, end="")
    print(f"wrote {target}", file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    scenario = _scenario_from_args(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"bad --values list {args.values!r}") from None
    if not values:
        raise InputError("--values is empty")
    rows, csv_text = sweep(scenario, args.param, values)
    out = _out_dir(args, scenario)
    target = write_report(out, f"sweep_{args.param}.csv", csv_text)
    print(csv_text, end="")
    print(f"wrote {target}", file=sys.stderr)
    return 0


def _cmd_export_lp(args) -> int:
    scenario = _scenario_from_args(args)
    case = prepare_case(scenario)
    strategy = scenario.strategy
    mode = scenario.mode
    warmup = None
    if strategy in (Strategy.OPTIMAL, Strategy.NO_RELOCATION) and scenario.gap > 0:
        warmup = warmup_objective(case, mode)
    catalog = build_catalog(
        case.expnet, case.demands, strategy, mode,
        case.veh, case.charger, case.costs,
        k=scenario.k, gap=scenario.gap, reference_objective=warmup or 0.0,
    )
    problem = build_problem(
        case.expnet, case.demands, catalog, mode, strategy,
        case.veh, case.charger, case.costs,
        relocation_window_start=int(
            scenario.get("plan", "relocation_window_start", 22)
        ),
    )
    text = export_lp(problem)
    if args.lp_out:
        with open(args.lp_out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(
            f"wrote {args.lp_out} ({problem.n_vars} vars, {problem.n_rows} rows)"
        )
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aevplan",
        description=(
            "Joint fleet sizing and charging-station planning for autonomous "
            "electric vehicles on intercity road networks."
        ),
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="log more (-v, -vv)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", help="print the range-feasible network expansion")
    p.add_argument("--network", required=True, help="network file")
    p.add_argument("--range", type=float, dest="range_km", required=True)
    p.set_defaults(func=_cmd_expand)

    p = sub.add_parser("demand", help="synthesize a gravity demand file")
    p.add_argument("--network", required=True)
    p.add_argument("--daily-total", type=float, required=True)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--horizon", type=int, default=24)
    p.add_argument("--peak-hour", type=int, default=None)
    p.add_argument("--peak-share", type=float, default=0.15)
    p.add_argument("--out", required=True, help="demand file to write")
    p.set_defaults(func=_cmd_demand)

    p = sub.add_parser("plan", help="solve one strategy/mode combination")
    _add_scenario_args(p)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("compare", help="all strategies under both modes")
    _add_scenario_args(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("sweep", help="re-solve while sweeping one parameter")
    _add_scenario_args(p)
    p.add_argument(
        "--param",
        required=True,
        help="battery_kwh | power_kw | speed_kmh",
    )
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("export-lp", help="write the model in LP format")
    _add_scenario_args(p)
    p.add_argument("--lp-out", help="LP file (default: stdout)")
    p.set_defaults(func=_cmd_export_lp)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibilityError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
