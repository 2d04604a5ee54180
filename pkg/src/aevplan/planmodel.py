"""Time-indexed fleet + charging-station planning model.

Decision variables (in index order):

* ``x``          fleet size (integer)
* ``y_i``        chargers at node i (integer)
* ``f_{g,q,t}``  flow of demand pair g on candidate path q departing hour t
* ``r_{a,t}``    empty relocation flow on expanded arc a departing hour t
* ``p_{i,t}``    vehicles parked at node i during hour t
* ``p0_i``       vehicles parked at node i before the first hour

The hour grid is cyclic with period T: a trip departing hour t and occupying
tau whole hours drives through hours t, t+1, ..., t+tau-1 (mod T) and parks
from hour t+tau (mod T) on.  Trips that span midnight simply wrap.  Parking
stocks follow the recursion p[i,t] = p[i,t-1] + arrivals - departures with
p[i,-1] := p0_i, and the last-hour stock must restore the initial one so the
plan repeats day after day.

Charger sizing is per node and hour: installed plugs must cover a margin
times the charger-hours demanded during that hour, where each traversed arc
books its recharge into the hour the vehicle reaches the arc's head node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .costmodel import (
    DAYS_PER_YEAR,
    ChargerSpec,
    CostParams,
    Mode,
    VehicleSpec,
    arc_charge_hours,
    arc_drive_hours,
)
from .demandgen import DemandSet
from .errors import InfeasibilityError, InputError
from .netcore import ExpandedNetwork
from .pathsets import Path, PathCatalog, Strategy

SENSE_EQ = 0
SENSE_GE = 1
SENSE_LE = -1

_FLOOR_EPS = 1e-9  # keeps exact-integer float sums on the correct hour


def _charge_events(path: Path, expnet, veh, charger):
    """Per-arc recharge bookings: (head node, hour offset, plug hours).

    The vehicle reaches arc m's head after driving all arcs up to m and
    sitting through the recharges of arcs before m; the booking lands in the
    whole hour containing that instant, offset from the departure hour.
    """
    events = []
    elapsed = 0.0
    for aid in path.arcs:
        arc = expnet.arcs[aid]
        elapsed += arc_drive_hours(arc.length_km, veh)
        hours = arc_charge_hours(arc.length_km, veh, charger)
        events.append((arc.head, int(math.floor(elapsed + _FLOOR_EPS)), hours))
        elapsed += hours
    return events


@dataclass(frozen=True)
class VarIndex:
    """Dense variable numbering for one problem instance."""

    n_nodes: int
    horizon: int
    pairs: tuple[tuple[int, int], ...]
    paths_per_pair: tuple[int, ...]
    n_reloc_arcs: int

    x: int = 0

    def __post_init__(self):
        bases = []
        base = 0
        for npaths in self.paths_per_pair:
            bases.append(base)
            base += npaths * self.horizon
        object.__setattr__(self, "_loaded_bases", tuple(bases))
        object.__setattr__(self, "_n_loaded", base)

    @property
    def off_y(self) -> int:
        return 1

    @property
    def off_loaded(self) -> int:
        return 1 + self.n_nodes

    @property
    def off_reloc(self) -> int:
        return self.off_loaded + self._n_loaded

    @property
    def off_park(self) -> int:
        return self.off_reloc + self.n_reloc_arcs * self.horizon

    @property
    def off_park0(self) -> int:
        return self.off_park + self.n_nodes * self.horizon

    @property
    def n_vars(self) -> int:
        return self.off_park0 + self.n_nodes

    def y(self, i: int) -> int:
        return self.off_y + i

    def loaded(self, pair_idx: int, q: int, t: int) -> int:
        return self.off_loaded + self._loaded_bases[pair_idx] + q * self.horizon + t

    def reloc(self, a: int, t: int) -> int:
        return self.off_reloc + a * self.horizon + t

    def park(self, i: int, t: int) -> int:
        return self.off_park + i * self.horizon + t

    def park0(self, i: int) -> int:
        return self.off_park0 + i

    def block_sizes(self) -> dict[str, int]:
        T = self.horizon
        return {
            "fleet": 1,
            "chargers": self.n_nodes,
            "loaded": self._n_loaded,
            "relocation": self.n_reloc_arcs * T,
            "parking": self.n_nodes * T,
            "initial_parking": self.n_nodes,
        }

    def var_names(self) -> list[str]:
        names = ["x"]
        names += [f"y_{i}" for i in range(self.n_nodes)]
        for pi in range(len(self.pairs)):
            for q in range(self.paths_per_pair[pi]):
                names += [f"f_{pi}_{q}_{t}" for t in range(self.horizon)]
        for a in range(self.n_reloc_arcs):
            names += [f"r_{a}_{t}" for t in range(self.horizon)]
        for i in range(self.n_nodes):
            names += [f"p_{i}_{t}" for t in range(self.horizon)]
        names += [f"p0_{i}" for i in range(self.n_nodes)]
        return names


@dataclass
class PlanProblem:
    """One assembled MILP instance plus everything needed to read it back."""

    objective: np.ndarray
    A: sp.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray
    row_labels: list[str]
    index: VarIndex
    expnet: ExpandedNetwork
    demands: DemandSet
    catalog: PathCatalog
    mode: Mode
    strategy: Strategy
    veh: VehicleSpec
    charger: ChargerSpec
    costs: CostParams
    reloc_arcs: tuple[tuple[int, int], ...]
    _names: list[str] = field(default_factory=list, repr=False)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def n_rows(self) -> int:
        return self.rhs.shape[0]

    @property
    def horizon(self) -> int:
        return self.index.horizon

    def var_names(self) -> list[str]:
        if not self._names:
            self._names = self.index.var_names()
        return self._names


def build_problem(
    expnet: ExpandedNetwork,
    demands: DemandSet,
    catalog: PathCatalog,
    mode: Mode,
    strategy: Strategy,
    veh: VehicleSpec,
    charger: ChargerSpec,
    costs: CostParams,
    relocation_window_start: int = 22,
) -> PlanProblem:
    """Assemble the planning MILP.

    ``mode`` picks the operating-cost coefficients; the catalog decides which
    candidate paths exist (it may have been built under either mode, which
    lets callers re-cost one catalog under both).  With the NoRelocation
    strategy, relocation departures outside hours
    [relocation_window_start, T) are fixed to zero.
    """
    T = demands.horizon_hours
    n = expnet.n_nodes
    pairs: list[tuple[int, int]] = []
    entries = []
    for e in demands.entries:
        od = (e.origin, e.destination)
        if e.total <= 0:
            continue
        if od not in catalog.loaded:
            raise InputError(f"catalog has no paths for demand pair {od}")
        if not catalog.loaded[od]:
            raise InfeasibilityError(
                f"demand pair {od} has positive volume but an empty path set"
            )
        pairs.append(od)
        entries.append(e)
    reloc_arcs = tuple(sorted(catalog.relocation.keys()))
    index = VarIndex(
        n_nodes=n,
        horizon=T,
        pairs=tuple(pairs),
        paths_per_pair=tuple(len(catalog.loaded[od]) for od in pairs),
        n_reloc_arcs=len(reloc_arcs),
    )
    nv = index.n_vars

    obj = np.zeros(nv)
    obj[index.x] = costs.capital_recovery * costs.aev_cost
    for i in range(n):
        obj[index.y(i)] = costs.capital_recovery * costs.charger_cost

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    senses: list[int] = []
    rhs: list[float] = []
    labels: list[str] = []

    def new_row(label: str, sense: int, b: float) -> int:
        labels.append(label)
        senses.append(sense)
        rhs.append(b)
        return len(labels) - 1

    def put(row: int, col: int, val: float) -> None:
        rows.append(row)
        cols.append(col)
        vals.append(val)

    # --- demand satisfaction -------------------------------------------------
    demand_rows = {}
    for pi, (od, entry) in enumerate(zip(pairs, entries)):
        for t in range(T):
            r = new_row(f"dem_{pi}_{t}", SENSE_EQ, entry.volumes[t])
            demand_rows[(pi, t)] = r
            for q in range(index.paths_per_pair[pi]):
                put(r, index.loaded(pi, q, t), 1.0)

    # --- parking recursion / restoration -------------------------------------
    park_rows = {}
    for i in range(n):
        for t in range(T):
            r = new_row(f"park_{i}_{t}", SENSE_EQ, 0.0)
            park_rows[(i, t)] = r
            put(r, index.park(i, t), 1.0)
            if t > 0:
                put(r, index.park(i, t - 1), -1.0)
            else:
                put(r, index.park0(i), -1.0)
    restore_rows = []
    for i in range(n):
        r = new_row(f"restore_{i}", SENSE_GE, 0.0)
        restore_rows.append(r)
        put(r, index.park(i, T - 1), 1.0)
        put(r, index.park0(i), -1.0)

    # --- fleet coverage -------------------------------------------------------
    fleet_rows = []
    for t in range(T):
        r = new_row(f"fleet_{t}", SENSE_GE, 0.0)
        fleet_rows.append(r)
        put(r, index.x, 1.0)
        for i in range(n):
            put(r, index.park(i, t), -1.0)

    # --- charger sizing --------------------------------------------------------
    charger_rows = {}
    for i in range(n):
        for t in range(T):
            r = new_row(f"chg_{i}_{t}", SENSE_GE, 0.0)
            charger_rows[(i, t)] = r
            put(r, index.y(i), 1.0)

    margin = costs.charger_margin

    def wire_path(path: Path, col_of) -> None:
        """Connect one path's T departure columns into parking, fleet and
        charger rows; col_of(t) maps a departure hour to its column."""
        o, d = path.nodes[0], path.nodes[-1]
        tau = path.tau
        events = _charge_events(path, expnet, veh, charger)
        for t0 in range(T):
            col = col_of(t0)
            put(park_rows[(o, t0)], col, 1.0)           # departs: stock down
            put(park_rows[(d, (t0 + tau) % T)], col, -1.0)  # arrives: stock up
            for s in range(tau):
                put(fleet_rows[(t0 + s) % T], col, -1.0)
            for node, offset, hours in events:
                put(charger_rows[(node, (t0 + offset) % T)], col, -margin * hours)

    for pi, od in enumerate(pairs):
        for q, path in enumerate(catalog.loaded[od]):
            op = path.op_cost(mode)
            for t in range(T):
                obj[index.loaded(pi, q, t)] = DAYS_PER_YEAR * op
            wire_path(path, lambda t, pi=pi, q=q: index.loaded(pi, q, t))
    for a, arc_key in enumerate(reloc_arcs):
        path = catalog.relocation[arc_key]
        for t in range(T):
            obj[index.reloc(a, t)] = DAYS_PER_YEAR * path.op_cost_goods
        wire_path(path, lambda t, a=a: index.reloc(a, t))

    # --- bounds / integrality --------------------------------------------------
    lb = np.zeros(nv)
    ub = np.full(nv, np.inf)
    for i, node in enumerate(expnet.base.nodes):
        if math.isfinite(node.parking_capacity):
            for t in range(T):
                ub[index.park(i, t)] = node.parking_capacity
            ub[index.park0(i)] = node.parking_capacity
    if strategy is Strategy.NO_RELOCATION:
        for a in range(len(reloc_arcs)):
            for t in range(T):
                if t < relocation_window_start:
                    ub[index.reloc(a, t)] = 0.0
    integrality = np.zeros(nv, dtype=bool)
    integrality[index.x] = True
    for i in range(n):
        integrality[index.y(i)] = True

    A = sp.coo_matrix(
        (vals, (rows, cols)), shape=(len(labels), nv), dtype=np.float64
    ).tocsr()
    A.sum_duplicates()
    return PlanProblem(
        objective=obj,
        A=A,
        senses=np.array(senses, dtype=np.int8),
        rhs=np.array(rhs, dtype=np.float64),
        lb=lb,
        ub=ub,
        integrality=integrality,
        row_labels=labels,
        index=index,
        expnet=expnet,
        demands=demands,
        catalog=catalog,
        mode=mode,
        strategy=strategy,
        veh=veh,
        charger=charger,
        costs=costs,
        reloc_arcs=reloc_arcs,
    )


@dataclass(frozen=True)
class Violation:
    kind: str        # "row", "bound", "integrality", "conservation"
    label: str
    residual: float


def verify_solution(problem: PlanProblem, values, tol: float = 1e-6):
    """Independent feasibility check; returns all violations found.

    Checks every constraint row against its sense, variable bounds,
    integrality of x and y, and — as a derived consistency test — that the
    per-pair arc flows implied by the path variables balance at every node
    and hour (they do by construction; a nonzero residual indicates indexing
    corruption rather than an infeasible plan).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (problem.n_vars,):
        raise InputError(
            f"expected {problem.n_vars} values, got shape {v.shape}"
        )
    out = []
    residual = problem.A @ v - problem.rhs
    for r, (sense, res) in enumerate(zip(problem.senses, residual)):
        bad = (
            abs(res) > tol
            if sense == SENSE_EQ
            else (res < -tol if sense == SENSE_GE else res > tol)
        )
        if bad:
            out.append(Violation("row", problem.row_labels[r], float(res)))
    names = None
    for j in range(problem.n_vars):
        if v[j] < problem.lb[j] - tol or v[j] > problem.ub[j] + tol:
            names = names or problem.var_names()
            over = max(problem.lb[j] - v[j], v[j] - problem.ub[j])
            out.append(Violation("bound", names[j], float(over)))
        if problem.integrality[j] and abs(v[j] - round(v[j])) > tol:
            names = names or problem.var_names()
            out.append(
                Violation("integrality", names[j], float(abs(v[j] - round(v[j]))))
            )

    # derived arc-flow conservation per demand pair and departure hour
    index = problem.index
    T = index.horizon
    for pi, od in enumerate(index.pairs):
        paths = problem.catalog.loaded[od]
        for t in range(T):
            balance: dict[int, float] = {}
            for q, path in enumerate(paths):
                flow = v[index.loaded(pi, q, t)]
                if flow == 0.0:
                    continue
                for aid in path.arcs:
                    arc = problem.expnet.arcs[aid]
                    balance[arc.tail] = balance.get(arc.tail, 0.0) + flow
                    balance[arc.head] = balance.get(arc.head, 0.0) - flow
            demand = sum(v[index.loaded(pi, q, t)] for q in range(len(paths)))
            expect = {od[0]: demand, od[1]: -demand}
            keys = set(balance) | set(expect)
            for node in keys:
                res = balance.get(node, 0.0) - expect.get(node, 0.0)
                if abs(res) > 1e-9 * max(1.0, demand):
                    out.append(
                        Violation("conservation", f"pair{pi}_t{t}_node{node}", res)
                    )
    return out


@dataclass(frozen=True)
class CostBreakdown:
    """Annualised cost components; total equals the model objective."""

    fleet_capital: float
    charger_capital: float
    driving_time: float
    charging_time: float
    electricity: float
    maintenance: float

    @property
    def investment(self) -> float:
        return self.fleet_capital + self.charger_capital

    @property
    def total(self) -> float:
        return (
            self.investment
            + self.driving_time
            + self.charging_time
            + self.electricity
            + self.maintenance
        )


def cost_breakdown(problem: PlanProblem, values) -> CostBreakdown:
    """Split an objective value into investment and operating components.

    Time components follow the customer's clock: driving time covers every
    loaded arc, charging time only the mid-route recharges the customer
    waits for.  Goods traffic and relocation moves carry no time value.
    """
    v = np.asarray(values, dtype=np.float64)
    index = problem.index
    T = index.horizon
    time_value = 0.0 if problem.mode is Mode.GOODS else problem.costs.time_cost
    driving = charging = electricity = maintenance = 0.0
    for pi, od in enumerate(index.pairs):
        for q, path in enumerate(problem.catalog.loaded[od]):
            flow = sum(v[index.loaded(pi, q, t)] for t in range(T))
            annual = DAYS_PER_YEAR * flow
            driving += annual * time_value * path.drive_hours
            charging += annual * time_value * (path.passenger_hours - path.drive_hours)
            electricity += annual * path.electricity_cost
            maintenance += annual * path.maintenance_cost
    for a, arc_key in enumerate(problem.reloc_arcs):
        path = problem.catalog.relocation[arc_key]
        flow = sum(v[index.reloc(a, t)] for t in range(T))
        annual = DAYS_PER_YEAR * flow
        electricity += annual * path.electricity_cost
        maintenance += annual * path.maintenance_cost
    zeta = problem.costs.capital_recovery
    return CostBreakdown(
        fleet_capital=zeta * problem.costs.aev_cost * float(v[index.x]),
        charger_capital=zeta
        * problem.costs.charger_cost
        * float(sum(v[index.y(i)] for i in range(index.n_nodes))),
        driving_time=driving,
        charging_time=charging,
        electricity=electricity,
        maintenance=maintenance,
    )


@dataclass
class PlanSolution:
    """A solved plan in reporting-friendly form."""

    fleet_size: int
    chargers: tuple[int, ...]
    objective: float
    breakdown: CostBreakdown
    loaded: dict[tuple[int, int], np.ndarray]   # pair -> (n_paths, T) flows
    relocation: dict[tuple[int, int], np.ndarray]  # arc -> (T,) flows
    parking: np.ndarray                          # (n_nodes, T)
    initial_parking: np.ndarray                  # (n_nodes,)
    values: np.ndarray

    @property
    def total_chargers(self) -> int:
        return int(sum(self.chargers))

    def drive_counts(self, problem: PlanProblem) -> np.ndarray:
        """Vehicles on the road per hour (loaded + relocating)."""
        index = problem.index
        T = index.horizon
        counts = np.zeros(T)

        def add(path: Path, flows):
            for t0 in range(T):
                for s in range(path.tau):
                    counts[(t0 + s) % T] += flows[t0]

        for pi, od in enumerate(index.pairs):
            for q, path in enumerate(problem.catalog.loaded[od]):
                add(path, [self.values[index.loaded(pi, q, t)] for t in range(T)])
        for a, arc_key in enumerate(problem.reloc_arcs):
            add(
                problem.catalog.relocation[arc_key],
                [self.values[index.reloc(a, t)] for t in range(T)],
            )
        return counts


def decompose_solution(problem: PlanProblem, values) -> PlanSolution:
    v = np.asarray(values, dtype=np.float64)
    index = problem.index
    T = index.horizon
    loaded = {}
    for pi, od in enumerate(index.pairs):
        nq = index.paths_per_pair[pi]
        arr = np.empty((nq, T))
        for q in range(nq):
            for t in range(T):
                arr[q, t] = v[index.loaded(pi, q, t)]
        loaded[od] = arr
    reloc = {}
    for a, arc_key in enumerate(problem.reloc_arcs):
        reloc[arc_key] = np.array([v[index.reloc(a, t)] for t in range(T)])
    parking = np.empty((index.n_nodes, T))
    for i in range(index.n_nodes):
        for t in range(T):
            parking[i, t] = v[index.park(i, t)]
    p0 = np.array([v[index.park0(i)] for i in range(index.n_nodes)])
    return PlanSolution(
        fleet_size=int(round(v[index.x])),
        chargers=tuple(int(round(v[index.y(i)])) for i in range(index.n_nodes)),
        objective=float(problem.objective @ v),
        breakdown=cost_breakdown(problem, v),
        loaded=loaded,
        relocation=reloc,
        parking=parking,
        initial_parking=p0,
        values=v,
    )


def export_lp(problem: PlanProblem) -> str:
    """Serialize the instance in LP format with deterministic naming.

    Variables: x, y_<node>, f_<pair>_<path>_<hour>, r_<arc>_<hour>,
    p_<node>_<hour>, p0_<node>.  Rows keep their model labels.  Only finite
    upper bounds are emitted (defaults are [0, inf)); integer variables are
    listed under Generals.
    """
    names = problem.var_names()
    lines = [
        "\\ fleet + charging-station plan "
        f"({problem.mode.value}, {problem.strategy.value}, "
        f"T={problem.horizon}, {problem.n_vars} vars, {problem.n_rows} rows)",
        "Minimize",
    ]
    terms = []
    for j, c in enumerate(problem.objective):
        if c != 0.0:
            terms.append(f"{'+' if c >= 0 else '-'} {abs(float(c))!r} {names[j]}")
    lines.append(" obj: " + " ".join(terms).lstrip("+ "))
    lines.append("Subject To")
    A = problem.A.tocoo()
    by_row: dict[int, list[tuple[int, float]]] = {}
    for r, c, val in zip(A.row, A.col, A.data):
        by_row.setdefault(int(r), []).append((int(c), float(val)))
    rel = {SENSE_EQ: "=", SENSE_GE: ">=", SENSE_LE: "<="}
    for r, label in enumerate(problem.row_labels):
        terms = []
        for c, val in sorted(by_row.get(r, [])):
            if val == 0.0:
                continue
            terms.append(f"{'+' if val >= 0 else '-'} {abs(val)!r} {names[c]}")
        body = " ".join(terms).lstrip("+ ") or "0 x"
        lines.append(
            f" {label}: {body} {rel[int(problem.senses[r])]} {float(problem.rhs[r])!r}"
        )
    bound_lines = [
        f" {names[j]} <= {float(problem.ub[j])!r}"
        for j in range(problem.n_vars)
        if math.isfinite(problem.ub[j])
    ]
    if bound_lines:
        lines.append("Bounds")
        lines.extend(bound_lines)
    lines.append("Generals")
    lines.append(" " + " ".join(names[j] for j in np.nonzero(problem.integrality)[0]))
    lines.append("End")
    return "\n".join(lines) + "\n"
