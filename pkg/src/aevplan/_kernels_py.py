"""Pure-Python spur shortest-path kernel.

Fallback used when the compiled extension is unavailable (or when
AEVPLAN_PURE_KERNELS is set).  Same contract as aevplan._kernels.
"""

import heapq

INF = float("inf")


def spur_shortest_path(indptr, heads, weights, source, target, node_banned, edge_banned):
    """Cheapest source->target route avoiding banned nodes and edges.

    The graph is CSR encoded: edges of node u occupy slots
    indptr[u]:indptr[u+1] of ``heads``/``weights``, and the slot index is the
    edge id checked against ``edge_banned``.  Masks are indexable with
    nonzero meaning banned.  Returns (cost, [node ids]) or None when no
    admissible route exists.
    """
    n = len(indptr) - 1
    if node_banned[source] or node_banned[target]:
        return None
    dist = [INF] * n
    pred = [-1] * n
    done = [False] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == target:
            break
        for e in range(indptr[u], indptr[u + 1]):
            if edge_banned[e]:
                continue
            v = heads[e]
            if done[v] or node_banned[v]:
                continue
            nd = d + weights[e]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    if not done[target]:
        return None
    path = [target]
    while path[-1] != source:
        path.append(pred[path[-1]])
    path.reverse()
    return dist[target], path
