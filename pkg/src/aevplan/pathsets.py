"""Candidate path sets per OD pair: enumeration, costing and safe pruning.

For every demand pair the planner restricts itself to a catalog of candidate
routings over the expanded network.  The catalog is either a singleton
(min-time or min-operating-cost routing) or the k cheapest routings filtered
by a provably safe dominance test: a candidate is dropped only when even an
optimistic bound on the system-cost saving it could enable (cheaper
operation + freed charger capacity + possibly one vehicle less per unit
flow) cannot beat a ``gap`` fraction of a known feasible objective.

Relocation (empty) moves are restricted to single expanded arcs, so their
catalog is simply one single-arc path per expanded arc.
"""

from __future__ import annotations

import enum
import heapq
import logging
from dataclasses import dataclass

from . import kernels
from .costmodel import (
    DAYS_PER_YEAR,
    ChargerSpec,
    CostParams,
    Mode,
    VehicleSpec,
    arc_charge_hours,
    arc_drive_hours,
    arc_energy_kwh,
    arc_passenger_time,
    whole_hours,
)
from .demandgen import DemandSet
from .errors import InfeasibilityError, InputError
from .netcore import ExpandedNetwork

log = logging.getLogger(__name__)

_TIE_EPS = 1e-9          # absolute cost window treated as "tied" during search
_TIE_CLASS_LIMIT = 10_000  # safety valve against pathological tie explosions


class Strategy(enum.Enum):
    MIN_TIME = "mintime"
    MIN_OPERATION = "minoperation"
    NO_RELOCATION = "norelocation"
    OPTIMAL = "optimal"

    @classmethod
    def parse(cls, text) -> "Strategy":
        key = str(text).strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if member.value == key:
                return member
        raise InputError(
            f"unknown strategy {text!r}; expected one of "
            f"{[m.value for m in cls]}"
        )


@dataclass(frozen=True)
class Path:
    """One routing over the expanded network with its per-trip figures.

    ``charge_hours`` counts every recharge including the one after arrival;
    ``passenger_hours`` excludes that final recharge (the customer is gone);
    ``occupancy_hours`` is driving plus all recharging — the time the vehicle
    itself is unavailable — and ``tau`` is that rounded up to whole hours.
    """

    od: tuple[int, int]
    nodes: tuple[int, ...]
    arcs: tuple[int, ...]
    length_km: float
    drive_hours: float
    charge_hours: float
    passenger_hours: float
    occupancy_hours: float
    tau: int
    electricity_cost: float
    maintenance_cost: float
    op_cost_passenger: float
    op_cost_goods: float

    def op_cost(self, mode: Mode) -> float:
        return self.op_cost_passenger if mode is Mode.PASSENGER else self.op_cost_goods


def path_metrics(
    expnet: ExpandedNetwork,
    node_seq,
    veh: VehicleSpec,
    charger: ChargerSpec,
    costs: CostParams,
) -> Path:
    """Cost out one node sequence as a Path.

    Every consecutive node pair must be an expanded arc.  The last arc is the
    destination arc: its recharge burdens the vehicle but not the customer.
    """
    nodes = tuple(node_seq)
    if len(nodes) < 2:
        raise InputError(f"path needs at least two nodes, got {nodes}")
    arcs = tuple(
        expnet.arc_id(nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1)
    )
    length = drive = charge = pax = elec = 0.0
    for pos, aid in enumerate(arcs):
        arc = expnet.arcs[aid]
        is_dest = pos == len(arcs) - 1
        length += arc.length_km
        drive += arc_drive_hours(arc.length_km, veh)
        charge += arc_charge_hours(arc.length_km, veh, charger)
        pax += arc_passenger_time(arc.length_km, is_dest, veh, charger)
        elec += expnet.price_at(arc.head) * arc_energy_kwh(arc.length_km, veh, charger)
    maint = costs.maintenance_cost * length
    occupancy = drive + charge
    return Path(
        od=(nodes[0], nodes[-1]),
        nodes=nodes,
        arcs=arcs,
        length_km=length,
        drive_hours=drive,
        charge_hours=charge,
        passenger_hours=pax,
        occupancy_hours=occupancy,
        tau=whole_hours(occupancy),
        electricity_cost=elec,
        maintenance_cost=maint,
        op_cost_passenger=costs.time_cost * pax + elec + maint,
        op_cost_goods=elec + maint,
    )


class PathEnumerator:
    """k-cheapest loopless path search over one expanded network.

    Holds the CSR encoding once; per OD pair it builds the arc-weight vector
    (destination arcs are cheaper for passengers because the final recharge
    isn't waited for) and runs a deviation search (shortest path, then
    repeated spur searches off already-accepted paths).  Ties within 1e-9
    are gathered fully and broken by (cost, length, node sequence), which
    makes the result independent of search order.
    """

    def __init__(self, expnet, veh, charger, costs):
        self.expnet = expnet
        self.veh = veh
        self.charger = charger
        self.costs = costs
        indptr, heads, lengths = expnet.csr()
        self.indptr, self.heads = kernels.adapt_graph(indptr, heads)
        self._lengths = lengths
        self._n = expnet.n_nodes
        self._m = len(heads)
        # mode-dependent per-arc weights, destination surcharge handled per pair
        self._base = {}
        for mode in Mode:
            time_value = 0.0 if mode is Mode.GOODS else costs.time_cost
            base = []
            for arc in expnet.arcs:
                t = arc_passenger_time(arc.length_km, False, veh, charger)
                base.append(
                    time_value * t
                    + expnet.price_at(arc.head)
                    * arc_energy_kwh(arc.length_km, veh, charger)
                    + costs.maintenance_cost * arc.length_km
                )
            self._base[mode] = base
        # occupancy weights for min-time search (destination-independent)
        self._occ = [
            arc_drive_hours(a.length_km, veh) + arc_charge_hours(a.length_km, veh, charger)
            for a in expnet.arcs
        ]

    def _weights_for(self, destination: int, mode: Mode):
        w = list(self._base[mode])
        if mode is not Mode.GOODS:
            discount = self.costs.time_cost
            for aid, arc in enumerate(self.expnet.arcs):
                if arc.head == destination:
                    w[aid] -= discount * arc_charge_hours(
                        arc.length_km, self.veh, self.charger
                    )
        return w

    def _deviation_search(self, weights, source, target, k):
        """Yen-style enumeration; returns >= k routes if they exist, with the
        cost tie-class at the k-th position fully gathered."""
        w = kernels.adapt_weights(weights)
        node_mask = kernels.new_mask(self._n)
        edge_mask = kernels.new_mask(self._m)
        first = kernels.spur_shortest_path(
            self.indptr, self.heads, w, source, target, node_mask, edge_mask
        )
        if first is None:
            return []
        accepted = [(first[0], tuple(first[1]))]
        seen = {accepted[0][1]}
        frontier = []  # heap of (cost, nodes)

        def spur_from(cost_so_far, nodes):
            # prefix weights along `nodes`
            arc_w = []
            for i in range(len(nodes) - 1):
                arc_w.append(weights[self.expnet.arc_id(nodes[i], nodes[i + 1])])
            prefix = [0.0]
            for val in arc_w:
                prefix.append(prefix[-1] + val)
            # common-prefix length of every accepted path with `nodes`
            cpl = []
            for _, other in accepted:
                c = 0
                limit = min(len(other), len(nodes))
                while c < limit and other[c] == nodes[c]:
                    c += 1
                cpl.append(c)
            for i in range(len(nodes) - 1):
                spur_node = nodes[i]
                banned_edges = []
                for (_, other), c in zip(accepted, cpl):
                    if c >= i + 1 and len(other) > i + 1:
                        eid = self.expnet.arc_id(other[i], other[i + 1])
                        if not edge_mask[eid]:
                            edge_mask[eid] = 1
                            banned_edges.append(eid)
                banned_nodes = nodes[:i]
                for u in banned_nodes:
                    node_mask[u] = 1
                res = kernels.spur_shortest_path(
                    self.indptr, self.heads, w, spur_node, target,
                    node_mask, edge_mask,
                )
                for u in banned_nodes:
                    node_mask[u] = 0
                for eid in banned_edges:
                    edge_mask[eid] = 0
                if res is None:
                    continue
                cand = nodes[:i] + tuple(res[1])
                if cand in seen:
                    continue
                seen.add(cand)
                heapq.heappush(frontier, (prefix[i] + res[0], cand))

        spur_from(*accepted[0])
        while frontier:
            if len(accepted) >= k and frontier[0][0] > accepted[k - 1][0] + _TIE_EPS:
                break
            if len(accepted) >= _TIE_CLASS_LIMIT:
                raise InputError(
                    f"tie class at k={k} exceeds {_TIE_CLASS_LIMIT} paths; "
                    "perturb arc costs or lower k"
                )
            item = heapq.heappop(frontier)
            accepted.append(item)
            spur_from(*item)
        return accepted

    def k_cheapest(self, od, k, mode: Mode) -> list[Path]:
        """The k cheapest loopless routings for one OD pair.

        Exact in operating cost; among equal-cost routings shorter ones come
        first, then lexicographically smaller node sequences.  Fewer than k
        are returned when the pair doesn't admit k loopless routes; an
        unreachable pair yields [].
        """
        source, target = od
        if source == target:
            raise InputError("origin equals destination")
        if k < 1:
            raise InputError(f"k must be >= 1, got {k}")
        pool = self._deviation_search(self._weights_for(target, mode), source, target, k)
        paths = [
            path_metrics(self.expnet, nodes, self.veh, self.charger, self.costs)
            for _, nodes in pool
        ]
        paths.sort(key=lambda p: (p.op_cost(mode), p.length_km, p.nodes))
        return paths[:k]

    def min_operation(self, od, mode: Mode) -> Path | None:
        got = self.k_cheapest(od, 1, mode)
        return got[0] if got else None

    def min_time(self, od, mode: Mode) -> Path | None:
        """Routing with the fewest vehicle-occupancy hours; cost breaks ties."""
        source, target = od
        pool = self._deviation_search(list(self._occ), source, target, 1)
        if not pool:
            return None
        paths = [
            path_metrics(self.expnet, nodes, self.veh, self.charger, self.costs)
            for _, nodes in pool
        ]
        paths.sort(key=lambda p: (p.occupancy_hours, p.op_cost(mode), p.nodes))
        return paths[0]


def k_cheapest_paths(
    expnet: ExpandedNetwork,
    od,
    k: int,
    mode: Mode,
    veh: VehicleSpec,
    charger: ChargerSpec,
    costs: CostParams,
) -> list[Path]:
    """One-shot convenience wrapper around PathEnumerator.k_cheapest."""
    return PathEnumerator(expnet, veh, charger, costs).k_cheapest(od, k, mode)


def delta_cost(
    expnet: ExpandedNetwork,
    candidate: Path,
    base: Path,
    lam: float,
    mode: Mode,
    veh: VehicleSpec,
    charger: ChargerSpec,
    costs: CostParams,
) -> float:
    """Optimistic annual saving from moving one OD pair's flow to ``candidate``.

    ``base`` is the pair's cheapest routing, ``lam`` the peak hourly flow.
    The bound credits the candidate with: the (negative, if it is dearer)
    operating-cost difference; the annualised charger capacity freed on every
    arc of ``base`` the candidate no longer uses; and one vehicle per unit
    flow when the candidate strictly reduces whole-hour occupancy.  A
    candidate whose bound cannot exceed a small fraction of a feasible
    objective can be dropped without losing optimality.
    """
    if candidate.od != base.od:
        raise InputError(
            f"paths belong to different OD pairs: {candidate.od} vs {base.od}"
        )
    if lam < 0:
        raise InputError("flow must be nonnegative")
    annual_gap = DAYS_PER_YEAR * lam * (base.op_cost(mode) - candidate.op_cost(mode))
    dropped = set(base.arcs) - set(candidate.arcs)
    freed_hours = sum(
        arc_charge_hours(expnet.arcs[aid].length_km, veh, charger) for aid in dropped
    )
    saving = annual_gap + (
        costs.capital_recovery
        * costs.charger_cost
        * costs.charger_margin
        * freed_hours
        * lam
    )
    if candidate.occupancy_hours < base.occupancy_hours - 1e-12:
        saving += costs.capital_recovery * costs.aev_cost * lam
    return saving


@dataclass(frozen=True)
class PruneStats:
    candidates: int
    kept: int

    @property
    def dropped(self) -> int:
        return self.candidates - self.kept


def prune_loaded(
    expnet: ExpandedNetwork,
    candidates: list[Path],
    lam: float,
    mode: Mode,
    veh: VehicleSpec,
    charger: ChargerSpec,
    costs: CostParams,
    reference_objective: float,
    gap: float,
) -> tuple[list[Path], PruneStats]:
    """Filter a sorted candidate list by the delta_cost dominance test.

    The cheapest candidate is always kept; any other survives iff its
    optimistic saving exceeds gap * reference_objective.  gap = 0 keeps
    every candidate that could matter at all.
    """
    if not candidates:
        return [], PruneStats(0, 0)
    if gap < 0:
        raise InputError("gap must be nonnegative")
    if gap > 0 and reference_objective <= 0:
        raise InputError("a positive reference objective is required when gap > 0")
    base = candidates[0]
    threshold = gap * reference_objective
    kept = [base]
    for cand in candidates[1:]:
        if delta_cost(expnet, cand, base, lam, mode, veh, charger, costs) > threshold:
            kept.append(cand)
    return kept, PruneStats(candidates=len(candidates), kept=len(kept))


def relocation_pathsets(
    expnet: ExpandedNetwork,
    veh: VehicleSpec,
    charger: ChargerSpec,
    costs: CostParams,
) -> dict[tuple[int, int], Path]:
    """Single-arc relocation moves, one per expanded arc.

    Restricting empty moves to single arcs loses nothing: any multi-arc
    empty move decomposes into consecutive single-arc moves with the same
    total cost and occupancy budget.
    """
    return {
        (a.tail, a.head): path_metrics(
            expnet, (a.tail, a.head), veh, charger, costs
        )
        for a in expnet.arcs
    }


@dataclass
class PathCatalog:
    """Candidate routings per demand pair plus the relocation arc set."""

    loaded: dict[tuple[int, int], tuple[Path, ...]]
    relocation: dict[tuple[int, int], Path]
    strategy: Strategy
    mode: Mode
    k: int
    gap: float
    candidate_counts: dict[tuple[int, int], int]

    @property
    def candidate_path_count(self) -> int:
        return sum(self.candidate_counts.values())

    @property
    def kept_path_count(self) -> int:
        return sum(len(v) for v in self.loaded.values())


def build_catalog(
    expnet: ExpandedNetwork,
    demands: DemandSet,
    strategy: Strategy,
    mode: Mode,
    veh: VehicleSpec,
    charger: ChargerSpec,
    costs: CostParams,
    k: int = 150,
    gap: float = 1e-4,
    reference_objective: float = 0.0,
) -> PathCatalog:
    """Assemble the per-pair candidate sets one strategy needs.

    MinTime / MinOperation fix a single routing per pair.  Optimal (and
    NoRelocation, which shares its path sets and differs only in when empty
    moves may depart) enumerates the k cheapest routings and prunes them
    with the dominance test at the given gap.
    """
    enum_ = PathEnumerator(expnet, veh, charger, costs)
    loaded: dict[tuple[int, int], tuple[Path, ...]] = {}
    counts: dict[tuple[int, int], int] = {}
    for entry in demands.entries:
        od = (entry.origin, entry.destination)
        if entry.total <= 0:
            continue
        if strategy is Strategy.MIN_TIME:
            best = enum_.min_time(od, mode)
            chosen = [best] if best is not None else []
            counts[od] = len(chosen)
        elif strategy is Strategy.MIN_OPERATION:
            best = enum_.min_operation(od, mode)
            chosen = [best] if best is not None else []
            counts[od] = len(chosen)
        else:
            cands = enum_.k_cheapest(od, k, mode)
            counts[od] = len(cands)
            chosen, _ = prune_loaded(
                expnet, cands, entry.peak_rate, mode, veh, charger, costs,
                reference_objective, gap,
            )
        if not chosen:
            names = expnet.base.name_of
            raise InfeasibilityError(
                f"demand pair ({names(od[0])},{names(od[1])}) has positive "
                "volume but no feasible routing"
            )
        loaded[od] = tuple(chosen)
    return PathCatalog(
        loaded=loaded,
        relocation=relocation_pathsets(expnet, veh, charger, costs),
        strategy=strategy,
        mode=mode,
        k=k,
        gap=gap,
        candidate_counts=counts,
    )
