import heapq
import itertools

import numpy as np
import pytest

from catzero._kernels import _USE_NUMBA, csr_dijkstra, dijkstra_path, ft_reach


def to_csr(n, edges):
    """edges: list of (u, v, w), both directions added."""
    adj = [[] for _ in range(n)]
    for u, v, w in edges:
        adj[u].append((v, w))
        adj[v].append((u, w))
    indptr = np.zeros(n + 1, np.int64)
    idx = []
    wts = []
    for u in range(n):
        for v, w in adj[u]:
            idx.append(v)
            wts.append(w)
        indptr[u + 1] = len(idx)
    return indptr, np.array(idx, np.int64), np.array(wts, float)


def reference_dijkstra(n, edges, seeds):
    adj = [[] for _ in range(n)]
    for u, v, w in edges:
        adj[u].append((v, w))
        adj[v].append((u, w))
    dist = [np.inf] * n
    pq = []
    for s, d0 in seeds:
        if d0 < dist[s]:
            dist[s] = d0
            heapq.heappush(pq, (d0, s))
    while pq:
        d, u = heapq.heappop(pq)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(pq, (nd, v))
    return np.array(dist)


def run(indptr, idx, wts, seeds, target=-1, cutoff=np.inf):
    sn = np.array([s for s, _ in seeds], np.int64)
    sd = np.array([d for _, d in seeds], float)
    return csr_dijkstra(indptr, idx, wts, sn, sd, np.int64(target), float(cutoff))


def random_graph(rng, n, extra):
    edges = [(i, i + 1, float(rng.uniform(0.1, 2))) for i in range(n - 1)]
    for _ in range(extra):
        u, v = rng.integers(0, n, 2)
        if u != v:
            edges.append((int(u), int(v), float(rng.uniform(0.1, 2))))
    return edges


class TestDijkstra:
    def test_path_graph(self):
        edges = [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5)]
        indptr, idx, wts = to_csr(4, edges)
        dist, pred = run(indptr, idx, wts, [(0, 0.0)])
        assert np.allclose(dist, [0.0, 1.0, 3.0, 3.5])
        assert dijkstra_path(pred, 3) == [0, 1, 2, 3]

    def test_matches_reference_random(self):
        rng = np.random.default_rng(5)
        for trial in range(20):
            n = int(rng.integers(5, 60))
            edges = random_graph(rng, n, int(rng.integers(0, 3 * n)))
            seeds = [(int(rng.integers(0, n)), float(rng.uniform(0, 1)))]
            if trial % 2:
                seeds.append((int(rng.integers(0, n)), float(rng.uniform(0, 1))))
            indptr, idx, wts = to_csr(n, edges)
            dist, _ = run(indptr, idx, wts, seeds)
            ref = reference_dijkstra(n, edges, seeds)
            assert np.allclose(dist, ref)

    def test_seed_offsets(self):
        edges = [(0, 1, 1.0), (1, 2, 1.0)]
        indptr, idx, wts = to_csr(3, edges)
        dist, _ = run(indptr, idx, wts, [(0, 5.0), (2, 0.25)])
        assert np.allclose(dist, [2.25, 1.25, 0.25])

    def test_cutoff_prunes(self):
        edges = [(i, i + 1, 1.0) for i in range(9)]
        indptr, idx, wts = to_csr(10, edges)
        dist, _ = run(indptr, idx, wts, [(0, 0.0)], cutoff=3.5)
        assert np.allclose(dist[:4], [0, 1, 2, 3])
        assert np.all(np.isinf(dist[4:]))

    def test_early_exit_target_exact_at_target(self):
        rng = np.random.default_rng(9)
        n = 40
        edges = random_graph(rng, n, 60)
        indptr, idx, wts = to_csr(n, edges)
        full, _ = run(indptr, idx, wts, [(0, 0.0)])
        dist, pred = run(indptr, idx, wts, [(0, 0.0)], target=n - 1)
        assert np.isclose(dist[n - 1], full[n - 1])
        path = dijkstra_path(pred, n - 1)
        assert path[0] == 0 and path[-1] == n - 1
        lengths = dict()
        for u, v, w in edges:
            lengths[(u, v)] = min(w, lengths.get((u, v), np.inf))
            lengths[(v, u)] = min(w, lengths.get((v, u), np.inf))
        total = sum(lengths[(a, b)] for a, b in zip(path, path[1:]))
        assert np.isclose(total, full[n - 1])

    def test_pred_is_minus_one_at_seeds(self):
        edges = [(0, 1, 1.0)]
        indptr, idx, wts = to_csr(2, edges)
        _, pred = run(indptr, idx, wts, [(0, 0.0)])
        assert pred[0] == -1 and pred[1] == 0

    def test_deterministic_across_runs(self):
        rng = np.random.default_rng(21)
        n = 50
        edges = random_graph(rng, n, 100)
        indptr, idx, wts = to_csr(n, edges)
        d1, p1 = run(indptr, idx, wts, [(3, 0.1), (7, 0.0)])
        d2, p2 = run(indptr, idx, wts, [(3, 0.1), (7, 0.0)])
        assert np.array_equal(d1, d2) and np.array_equal(p1, p2)


def brute_force_ft(valid):
    """Exhaustive search over monotone staircases with free mode switches."""
    m, na, nb = valid.shape
    seen = set()
    stack = [
        (0, 0, k) for k in range(m) if valid[k, 0, 0]
    ]
    seen.update(stack)
    ok = np.zeros_like(valid)
    while stack:
        i, j, k = stack.pop()
        ok[k, i, j] = 1
        nxt = []
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            ii, jj = i + di, j + dj
            if ii < na and jj < nb and valid[k, ii, jj]:
                nxt.append((ii, jj, k))
        for k2 in range(m):
            if k2 != k and valid[k2, i, j]:
                nxt.append((i, j, k2))
        for s in nxt:
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return ok


class TestFtReach:
    def test_single_mode_diagonal(self):
        valid = np.zeros((1, 3, 3), np.uint8)
        for i in range(3):
            valid[0, i, i] = 1
        reach = ft_reach(valid)
        assert reach[0, 2, 2] == 1

    def test_blocked(self):
        valid = np.ones((1, 3, 3), np.uint8)
        valid[0, 1, :] = 0
        reach = ft_reach(valid)
        assert reach[0, 2, 2] == 0

    def test_mode_switch_required(self):
        # mode 0 covers the first half, mode 1 the second, overlap at (1, 1)
        valid = np.zeros((2, 3, 3), np.uint8)
        valid[0, 0, 0] = valid[0, 0, 1] = valid[0, 1, 1] = 1
        valid[1, 1, 1] = valid[1, 2, 1] = valid[1, 2, 2] = 1
        reach = ft_reach(valid)
        assert reach[1, 2, 2] == 1

    def test_no_switch_without_overlap(self):
        valid = np.zeros((2, 3, 3), np.uint8)
        valid[0, 0, 0] = valid[0, 1, 1] = 1
        valid[1, 1, 2] = valid[1, 2, 2] = 1
        # mode 1 never shares a cell with mode 0
        reach = ft_reach(valid)
        assert reach[1, 2, 2] == 0

    def test_matches_brute_force_random(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            m = int(rng.integers(1, 4))
            na = int(rng.integers(2, 6))
            nb = int(rng.integers(2, 6))
            valid = (rng.random((m, na, nb)) < 0.6).astype(np.uint8)
            assert np.array_equal(ft_reach(valid), brute_force_ft(valid))


def test_jit_flag_reported():
    # informational: fails only if numba import broke entirely
    import catzero._kernels as k

    assert isinstance(_USE_NUMBA, bool)
    assert k.csr_dijkstra is not None
