"""Road network model and range-feasible expansion.

A network is a directed graph with per-node gravity weight, electricity
price and optional parking capacity.  Expansion adds a pseudo-arc between
every ordered node pair whose shortest road distance fits within the
single-charge range, so that any arc of the expanded graph can be driven
without stopping to charge mid-arc.

Node ids are dense integers 0..n-1; human-readable names live only in the
file format and are carried along for reporting.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .errors import InputError, ParseError

INF = math.inf


@dataclass(frozen=True)
class Node:
    id: int
    gravity_weight: float = 1.0
    electricity_price: float = 0.0
    parking_capacity: float = INF

    def __post_init__(self):
        if self.gravity_weight < 0:
            raise InputError(f"node {self.id}: gravity weight must be >= 0")
        if self.electricity_price < 0:
            raise InputError(f"node {self.id}: electricity price must be >= 0")
        if self.parking_capacity < 0:
            raise InputError(f"node {self.id}: parking capacity must be >= 0")


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    length_km: float

    def __post_init__(self):
        if self.tail == self.head:
            raise InputError(f"self-loop arc at node {self.tail}")
        if self.length_km <= 0:
            raise InputError(
                f"arc ({self.tail},{self.head}): length must be positive"
            )


@dataclass(frozen=True)
class Network:
    nodes: tuple[Node, ...]
    arcs: tuple[Arc, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if ids != list(range(len(ids))):
            raise InputError("node ids must be dense integers 0..n-1 in order")
        if self.names and len(self.names) != len(self.nodes):
            raise InputError("names must match node count")
        seen = set()
        for a in self.arcs:
            if not (0 <= a.tail < len(ids)) or not (0 <= a.head < len(ids)):
                raise InputError(f"arc ({a.tail},{a.head}) references unknown node")
            if (a.tail, a.head) in seen:
                raise InputError(f"duplicate arc ({a.tail},{a.head})")
            seen.add((a.tail, a.head))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def name_of(self, i: int) -> str:
        return self.names[i] if self.names else str(i)

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except (ValueError, AttributeError):
            raise InputError(f"unknown node name {name!r}") from None

    def out_adjacency(self):
        """Per-node list of (head, length_km), sorted by head id."""
        adj = [[] for _ in self.nodes]
        for a in self.arcs:
            adj[a.tail].append((a.head, a.length_km))
        for lst in adj:
            lst.sort()
        return adj


def _single_source_paths(adj, n: int, source: int):
    """Dijkstra returning, per reachable node, (distance, node sequence).

    Heap entries are (distance, path) tuples, so among equal-distance routes
    the lexicographically smallest node sequence settles first — with
    strictly positive arc lengths every prefix of a settled path is itself
    settled, which makes the witness paths deterministic.
    """
    settled: dict[int, tuple[float, tuple[int, ...]]] = {}
    heap = [(0.0, (source,))]
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled[node] = (dist, path)
        for head, length in adj[node]:
            if head not in settled:
                heapq.heappush(heap, (dist + length, path + (head,)))
    return settled


def shortest_path_lengths(net: Network, source: int):
    """Map node id -> (distance km, predecessor id) from ``source``.

    Unreachable nodes get (inf, None); the source itself (0.0, None).
    """
    if not (0 <= source < net.n_nodes):
        raise InputError(f"unknown source node {source}")
    settled = _single_source_paths(net.out_adjacency(), net.n_nodes, source)
    out = {}
    for i in range(net.n_nodes):
        if i in settled:
            dist, path = settled[i]
            out[i] = (dist, path[-2] if len(path) > 1 else None)
        else:
            out[i] = (INF, None)
    return out


@dataclass(frozen=True)
class ExpandedArc:
    tail: int
    head: int
    length_km: float
    is_original: bool
    witness_path: tuple[int, ...]


@dataclass(frozen=True)
class ExpandedNetwork:
    base: Network
    arcs: tuple[ExpandedArc, ...]
    range_km: float
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._index.update({(a.tail, a.head): k for k, a in enumerate(self.arcs)})

    @property
    def n_nodes(self) -> int:
        return self.base.n_nodes

    def arc_id(self, tail: int, head: int) -> int:
        try:
            return self._index[(tail, head)]
        except KeyError:
            raise InputError(
                f"no expanded arc ({self.base.name_of(tail)},"
                f"{self.base.name_of(head)})"
            ) from None

    def has_arc(self, tail: int, head: int) -> bool:
        return (tail, head) in self._index

    def price_at(self, i: int) -> float:
        return self.base.nodes[i].electricity_price

    def csr(self):
        """CSR adjacency over the expanded arcs.

        Arc k occupies CSR slot k (arcs are sorted by (tail, head)), so CSR
        positions double as arc ids.  Returns (indptr, heads, lengths) as
        plain lists; callers convert to arrays as needed.
        """
        n = self.n_nodes
        indptr = [0] * (n + 1)
        for a in self.arcs:
            indptr[a.tail + 1] += 1
        for i in range(n):
            indptr[i + 1] += indptr[i]
        heads = [a.head for a in self.arcs]
        lengths = [a.length_km for a in self.arcs]
        return indptr, heads, lengths


def expand_network(net: Network, range_km: float) -> ExpandedNetwork:
    """Build the range-feasible expansion of ``net``.

    The expanded arc set is exactly { (i,j) : i != j, j reachable from i,
    shortest-dist(i,j) <= range_km }, each arc carrying the shortest road
    distance and one witness routing (deterministic: lexicographically
    smallest among shortest).  Original arcs longer than every alternative
    route keep their own length; original arcs beaten by a shorter detour
    are replaced by the detour distance.
    """
    if range_km <= 0:
        raise InputError(f"range must be positive, got {range_km}")
    original = {(a.tail, a.head) for a in net.arcs}
    adj = net.out_adjacency()
    arcs = []
    for i in range(net.n_nodes):
        settled = _single_source_paths(adj, net.n_nodes, i)
        for j in sorted(settled):
            if j == i:
                continue
            dist, path = settled[j]
            if dist <= range_km:
                arcs.append(
                    ExpandedArc(
                        tail=i,
                        head=j,
                        length_km=dist,
                        is_original=(i, j) in original,
                        witness_path=path,
                    )
                )
    return ExpandedNetwork(base=net, arcs=tuple(arcs), range_km=range_km)


# ---------------------------------------------------------------------------
# file format
#
#   # comment
#   node NAME GRAVITY_WEIGHT ELECTRICITY_PRICE [PARKING_CAPACITY]
#   arc  TAIL_NAME HEAD_NAME LENGTH_KM
#
# Nodes must be declared before arcs that use them.  Blank lines ignored.
# ---------------------------------------------------------------------------


def load_network(path) -> Network:
    names: list[str] = []
    nodes: list[Node] = []
    arcs: list[Arc] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            kind = fields[0].lower()
            try:
                if kind == "node":
                    if len(fields) not in (4, 5):
                        raise InputError(
                            "node lines need NAME WEIGHT PRICE [PARKING]"
                        )
                    name = fields[1]
                    if name in names:
                        raise InputError(f"duplicate node name {name!r}")
                    cap = float(fields[4]) if len(fields) == 5 else INF
                    nodes.append(
                        Node(
                            id=len(nodes),
                            gravity_weight=float(fields[2]),
                            electricity_price=float(fields[3]),
                            parking_capacity=cap,
                        )
                    )
                    names.append(name)
                elif kind == "arc":
                    if len(fields) != 4:
                        raise InputError("arc lines need TAIL HEAD LENGTH_KM")
                    try:
                        tail = names.index(fields[1])
                        head = names.index(fields[2])
                    except ValueError:
                        raise InputError(
                            f"arc references undeclared node in {line!r}"
                        ) from None
                    arcs.append(Arc(tail=tail, head=head, length_km=float(fields[3])))
                else:
                    raise InputError(f"unknown record type {fields[0]!r}")
            except InputError as exc:
                raise ParseError(str(exc), path=str(path), line=lineno) from None
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=lineno) from None
    try:
        return Network(nodes=tuple(nodes), arcs=tuple(arcs), names=tuple(names))
    except InputError as exc:
        raise ParseError(str(exc), path=str(path)) from None


def format_expansion(expnet: ExpandedNetwork) -> str:
    """Human-readable expanded arc table (one row per arc)."""
    net = expnet.base
    lines = [
        f"# expanded network: {net.n_nodes} nodes, {len(expnet.arcs)} arcs, "
        f"range {expnet.range_km:g} km",
        f"{'tail':>8} {'head':>8} {'km':>8}  {'kind':<8} via",
    ]
    for a in expnet.arcs:
        via = "-".join(net.name_of(i) for i in a.witness_path)
        kind = "road" if a.is_original else "pseudo"
        lines.append(
            f"{net.name_of(a.tail):>8} {net.name_of(a.head):>8} "
            f"{a.length_km:>8g}  {kind:<8} {via}"
        )
    return "\n".join(lines)
