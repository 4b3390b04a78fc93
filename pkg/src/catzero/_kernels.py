"""Hot numeric kernels.

Two kernels dominate run time: a seeded early-exit Dijkstra over CSR graphs
(geodesic initialization, distance fields, ball frontiers) and the boolean
grid dynamic program behind fellow-travel feasibility. Both are written as
plain array functions and compiled with numba when available. Setting
CATZERO_DISABLE_JIT=1 (or not having numba installed) runs the identical
Python definitions, so results never depend on which path executed.
"""

import os

import numpy as np

try:
    if os.environ.get("CATZERO_DISABLE_JIT", "") == "1":
        raise ImportError("jit disabled by env flag")
    from numba import njit

    _USE_NUMBA = True
except ImportError:
    _USE_NUMBA = False

    def njit(*args, **kwargs):  # pragma: no cover - trivial shim
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


def _csr_dijkstra_py(indptr, indices, weights, seed_nodes, seed_dists, target, cutoff):
    """Multi-seed Dijkstra on a CSR graph.

    seed_nodes start at the per-seed offsets in seed_dists (this is how
    geodesic endpoints living in cell interiors enter the boundary graph).
    Stops early once `target` (pass -1 for none) is settled or the frontier
    passes `cutoff`. Nodes beyond cutoff keep dist = inf. Returns
    (dist, pred); pred is -1 at seeds and unreached nodes.

    Ties are resolved deterministically: relaxations use strict improvement
    so the first CSR edge wins, and equal-distance heap entries pop in node
    id order.
    """
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, np.int64)
    done = np.zeros(n, np.uint8)
    cap = indices.shape[0] + seed_nodes.shape[0] + 1
    heap_d = np.empty(cap)
    heap_n = np.empty(cap, np.int64)
    hs = 0
    for i in range(seed_nodes.shape[0]):
        s = seed_nodes[i]
        ds = seed_dists[i]
        if ds <= cutoff and ds < dist[s]:
            dist[s] = ds
            heap_d[hs] = ds
            heap_n[hs] = s
            j = hs
            hs += 1
            while j > 0:
                p = (j - 1) >> 1
                if heap_d[p] > heap_d[j] or (
                    heap_d[p] == heap_d[j] and heap_n[p] > heap_n[j]
                ):
                    heap_d[p], heap_d[j] = heap_d[j], heap_d[p]
                    heap_n[p], heap_n[j] = heap_n[j], heap_n[p]
                    j = p
                else:
                    break
    while hs > 0:
        d0 = heap_d[0]
        u = heap_n[0]
        hs -= 1
        heap_d[0] = heap_d[hs]
        heap_n[0] = heap_n[hs]
        j = 0
        while True:
            l = 2 * j + 1
            r = l + 1
            m = j
            if l < hs and (
                heap_d[l] < heap_d[m] or (heap_d[l] == heap_d[m] and heap_n[l] < heap_n[m])
            ):
                m = l
            if r < hs and (
                heap_d[r] < heap_d[m] or (heap_d[r] == heap_d[m] and heap_n[r] < heap_n[m])
            ):
                m = r
            if m == j:
                break
            heap_d[m], heap_d[j] = heap_d[j], heap_d[m]
            heap_n[m], heap_n[j] = heap_n[j], heap_n[m]
            j = m
        if done[u]:
            continue
        if d0 > cutoff:
            break
        done[u] = 1
        if u == target:
            break
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            nd = d0 + weights[k]
            if nd <= cutoff and nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heap_d[hs] = nd
                heap_n[hs] = v
                j = hs
                hs += 1
                while j > 0:
                    p = (j - 1) >> 1
                    if heap_d[p] > heap_d[j] or (
                        heap_d[p] == heap_d[j] and heap_n[p] > heap_n[j]
                    ):
                        heap_d[p], heap_d[j] = heap_d[j], heap_d[p]
                        heap_n[p], heap_n[j] = heap_n[j], heap_n[p]
                        j = p
                    else:
                        break
    return dist, pred


def _ft_reach_py(valid):
    """Reachability for the fellow-travel grid program.

    valid has shape (modes, na, nb); a cell of the grid may be occupied in
    any valid mode, steps advance i, j or both by one, and mode switches are
    free while standing on a cell where both modes are valid. Returns the
    reachable-state table with the same shape.
    """
    m, na, nb = valid.shape
    reach = np.zeros((m, na, nb), np.uint8)
    for i in range(na):
        for j in range(nb):
            arrived = False
            if i == 0 and j == 0:
                for k in range(m):
                    if valid[k, 0, 0]:
                        arrived = True
                        break
            else:
                for k in range(m):
                    if not valid[k, i, j]:
                        continue
                    if i > 0 and reach[k, i - 1, j]:
                        arrived = True
                        break
                    if j > 0 and reach[k, i, j - 1]:
                        arrived = True
                        break
                    if i > 0 and j > 0 and reach[k, i - 1, j - 1]:
                        arrived = True
                        break
            if arrived:
                for k in range(m):
                    if valid[k, i, j]:
                        reach[k, i, j] = 1
    return reach


if _USE_NUMBA:
    csr_dijkstra = njit(cache=True)(_csr_dijkstra_py)
    ft_reach = njit(cache=True)(_ft_reach_py)
else:
    csr_dijkstra = _csr_dijkstra_py
    ft_reach = _ft_reach_py


def dijkstra_path(pred, node):
    """Walk predecessors back to a seed; returns node list seed -> node."""
    out = [int(node)]
    v = int(node)
    while pred[v] >= 0:
        v = int(pred[v])
        out.append(v)
    out.reverse()
    return out
