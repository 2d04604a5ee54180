# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled spur shortest-path kernel.

Contract identical to aevplan._kernels_py.spur_shortest_path: CSR graph,
banned-node / banned-edge masks, ties broken by node id so both backends
return bit-identical routes.
"""

import numpy as np

cimport numpy as cnp


cdef inline bint _heap_less(double* hd, int* hn, int a, int b) nogil:
    if hd[a] != hd[b]:
        return hd[a] < hd[b]
    return hn[a] < hn[b]


cdef inline void _heap_swap(double* hd, int* hn, int a, int b) nogil:
    cdef double td = hd[a]
    cdef int tn = hn[a]
    hd[a] = hd[b]
    hn[a] = hn[b]
    hd[b] = td
    hn[b] = tn


cdef inline void _heap_push(double* hd, int* hn, int* hsize, double d, int node) nogil:
    cdef int i = hsize[0]
    cdef int parent
    hd[i] = d
    hn[i] = node
    hsize[0] = i + 1
    while i > 0:
        parent = (i - 1) >> 1
        if _heap_less(hd, hn, i, parent):
            _heap_swap(hd, hn, i, parent)
            i = parent
        else:
            break


cdef inline void _heap_pop(double* hd, int* hn, int* hsize) nogil:
    cdef int last = hsize[0] - 1
    cdef int i = 0
    cdef int child
    hd[0] = hd[last]
    hn[0] = hn[last]
    hsize[0] = last
    while True:
        child = 2 * i + 1
        if child >= last:
            break
        if child + 1 < last and _heap_less(hd, hn, child + 1, child):
            child += 1
        if _heap_less(hd, hn, child, i):
            _heap_swap(hd, hn, i, child)
            i = child
        else:
            break


def spur_shortest_path(int[::1] indptr, int[::1] heads, double[::1] weights,
                       int source, int target,
                       const unsigned char[::1] node_banned,
                       const unsigned char[::1] edge_banned):
    """Cheapest source->target route avoiding banned nodes and edges.

    Returns (cost, [node ids]) or None when no admissible route exists.
    """
    cdef int n = indptr.shape[0] - 1
    cdef int m = heads.shape[0]
    if node_banned[source] or node_banned[target]:
        return None

    dist_arr = np.full(n, np.inf, dtype=np.float64)
    pred_arr = np.full(n, -1, dtype=np.int32)
    done_arr = np.zeros(n, dtype=np.uint8)
    heap_d_arr = np.empty(n + m + 1, dtype=np.float64)
    heap_n_arr = np.empty(n + m + 1, dtype=np.int32)
    cdef double[::1] dist = dist_arr
    cdef int[::1] pred = pred_arr
    cdef unsigned char[::1] done = done_arr
    cdef double[::1] heap_d = heap_d_arr
    cdef int[::1] heap_n = heap_n_arr

    cdef double* hd = &heap_d[0]
    cdef int* hn = &heap_n[0]
    cdef int hsize = 0
    cdef int u, v, e
    cdef double d, nd

    dist[source] = 0.0
    _heap_push(hd, hn, &hsize, 0.0, source)
    while hsize > 0:
        d = hd[0]
        u = hn[0]
        _heap_pop(hd, hn, &hsize)
        if done[u]:
            continue
        done[u] = 1
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
                _heap_push(hd, hn, &hsize, nd, v)

    if not done[target]:
        return None
    path = [target]
    u = target
    while u != source:
        u = pred[u]
        path.append(u)
    path.reverse()
    return dist[target], path
