"""Compare the compiled and pure-Python spur shortest-path kernels.

Two views of the same code path:

* micro: raw spur searches (the inner loop of the k-cheapest enumeration)
  on the 25-town fixture's expanded network, with randomly banned
  nodes/arcs as the deviation search would produce them;
* macro: full k-cheapest-path enumeration per OD pair through the actual
  enumerator, once per backend.

Run:  python benchmarks/bench_kernels.py [--k 50] [--pairs 40] [--repeat 3]
"""

from __future__ import annotations

import argparse
import random
import time
from pathlib import Path

import numpy as np

from aevplan import kernels
from aevplan.costmodel import ChargerSpec, Mode, VehicleSpec, derive_unit_costs
from aevplan.netcore import expand_network, load_network
from aevplan.pathsets import PathEnumerator

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def _activate(name: str):
    """Point the kernel dispatch at one backend (benchmark-only hack)."""
    mod = kernels.get_backend(name)
    kernels.COMPILED = name == "compiled"
    kernels.spur_shortest_path = mod.spur_shortest_path
    return mod


def _inputs():
    net = load_network(FIXTURES / "intercity25.net")
    veh = VehicleSpec(battery_kwh=75.0, speed_kmh=100.0)
    charger = ChargerSpec(power_kw=100.0)
    costs = derive_unit_costs(veh.battery_kwh, charger)
    expnet = expand_network(net, veh.range_km)
    return expnet, veh, charger, costs


def micro(expnet, name: str, queries, repeat: int) -> float:
    mod = _activate(name)
    indptr, heads, lengths = expnet.csr()
    g_indptr, g_heads = kernels.adapt_graph(indptr, heads)
    w = kernels.adapt_weights(lengths)
    n, m = expnet.n_nodes, len(heads)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for src, dst, banned_nodes, banned_edges in queries:
            node_mask = kernels.new_mask(n)
            edge_mask = kernels.new_mask(m)
            for u in banned_nodes:
                node_mask[u] = 1
            for e in banned_edges:
                edge_mask[e] = 1
            mod.spur_shortest_path(
                g_indptr, g_heads, w, src, dst, node_mask, edge_mask
            )
        best = min(best, time.perf_counter() - t0)
    return best


def macro(expnet, veh, charger, costs, name: str, pairs, k: int):
    _activate(name)
    enum_ = PathEnumerator(expnet, veh, charger, costs)
    t0 = time.perf_counter()
    total = 0
    for od in pairs:
        total += len(enum_.k_cheapest(od, k, Mode.PASSENGER))
    dt = time.perf_counter() - t0
    return dt, total


def cross_check(expnet, queries) -> None:
    """Both backends must return identical (cost, path) answers."""
    answers = {}
    for name in ("pure-python", "compiled"):
        mod = _activate(name)
        indptr, heads, lengths = expnet.csr()
        g_indptr, g_heads = kernels.adapt_graph(indptr, heads)
        w = kernels.adapt_weights(lengths)
        n, m = expnet.n_nodes, len(heads)
        out = []
        for src, dst, banned_nodes, banned_edges in queries:
            node_mask = kernels.new_mask(n)
            edge_mask = kernels.new_mask(m)
            for u in banned_nodes:
                node_mask[u] = 1
            for e in banned_edges:
                edge_mask[e] = 1
            hit = mod.spur_shortest_path(
                g_indptr, g_heads, w, src, dst, node_mask, edge_mask
            )
            out.append(
                None if hit is None else (round(float(hit[0]), 9), list(hit[1]))
            )
        answers[name] = out
    if answers["pure-python"] != answers["compiled"]:
        raise AssertionError("backends disagree on spur search results")
    print(f"cross-check: backends agree on {len(queries)} queries")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=50, help="paths per OD pair (macro)")
    ap.add_argument("--pairs", type=int, default=40, help="OD pairs (macro)")
    ap.add_argument("--queries", type=int, default=2000, help="spur searches (micro)")
    ap.add_argument("--repeat", type=int, default=3, help="timing repeats, best-of")
    args = ap.parse_args()

    expnet, veh, charger, costs = _inputs()
    n, m = expnet.n_nodes, len(expnet.arcs)
    print(f"expanded network: {n} nodes, {m} arcs")

    rng = random.Random(7)
    queries = []
    for _ in range(args.queries):
        src, dst = rng.sample(range(n), 2)
        banned_nodes = rng.sample(range(n), rng.randint(0, 4))
        banned_edges = rng.sample(range(m), rng.randint(0, 12))
        queries.append((src, dst, banned_nodes, banned_edges))
    pairs = []
    while len(pairs) < args.pairs:
        od = tuple(rng.sample(range(n), 2))
        if od not in pairs:
            pairs.append(od)

    names = ["pure-python"]
    try:
        kernels.get_backend("compiled")
        names.append("compiled")
    except ImportError:
        print("compiled kernel not built; benchmarking the fallback only")

    if len(names) == 2:
        cross_check(expnet, queries[:200])

    micro_t = {}
    for name in names:
        micro_t[name] = micro(expnet, name, queries, args.repeat)
        rate = args.queries / micro_t[name]
        print(f"micro  {name:12s} {micro_t[name]*1e3:8.1f} ms "
              f"({rate:,.0f} spur searches/s)")
    macro_t = {}
    for name in names:
        dt, total = macro(expnet, veh, charger, costs, name, pairs, args.k)
        macro_t[name] = dt
        print(f"macro  {name:12s} {dt*1e3:8.1f} ms "
              f"({total} paths over {args.pairs} pairs at k={args.k})")
    if len(names) == 2:
        print(f"speedup: micro x{micro_t['pure-python']/micro_t['compiled']:.1f}, "
              f"macro x{macro_t['pure-python']/macro_t['compiled']:.1f}")
    # leave the process with the default backend wiring
    _activate("compiled" if "compiled" in names else "pure-python")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
