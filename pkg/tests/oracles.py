"""Independent brute-force reference solvers used by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from auvcage.graphcut import COST_SCALE


def scaled_costs(costs) -> np.ndarray:
    return np.rint(np.asarray(costs, dtype=float) * COST_SCALE).astype(np.int64)


def brute_force_min_cut(n_vertices, edges, costs, source_set, sink_set) -> int:
    """Cheapest boundary over every labeling of the unpinned vertices (scaled ints)."""
    free = [v for v in range(n_vertices) if v not in source_set and v not in sink_set]
    w = scaled_costs(costs)
    edges = np.asarray(edges)
    best = None
    side = np.zeros(n_vertices, dtype=bool)
    side[list(source_set)] = True
    for bits in range(1 << len(free)):
        for k, v in enumerate(free):
            side[v] = bool(bits >> k & 1)
        total = int(w[side[edges[:, 0]] != side[edges[:, 1]]].sum())
        if best is None or total < best:
            best = total
    return best


def scipy_max_flow(n_vertices, edges, costs, source_set, sink_set) -> int:
    """Max-flow value from scipy's solver on the same integer capacities."""
    w = scaled_costs(costs)
    s, t = n_vertices, n_vertices + 1
    big = int(w.sum()) + 1
    rows, cols, caps = [], [], []
    for (u, v), c in zip(np.asarray(edges), w):
        rows += [u, v]
        cols += [v, u]
        caps += [c, c]
    for v in source_set:
        rows.append(s), cols.append(v), caps.append(big)
    for v in sink_set:
        rows.append(v), cols.append(t), caps.append(big)
    g = csr_matrix((np.array(caps, dtype=np.int64), (rows, cols)), shape=(n_vertices + 2,) * 2)
    g.sum_duplicates()
    assert big < 2**31, "scipy's solver needs int32 capacities"
    return int(maximum_flow(g.astype(np.int32), s, t).flow_value)


def brute_force_bottleneck(costs) -> float:
    c = np.asarray(costs, dtype=float)
    n_agents, n_slots = c.shape
    best = math.inf
    for agents in itertools.permutations(range(n_agents), n_slots):
        best = min(best, max(c[a, j] for j, a in enumerate(agents)))
    return best


def brute_force_set_cover(cover_matrix) -> int:
    """Smallest number of rows (candidates) whose union covers every column."""
    cover = np.asarray(cover_matrix, dtype=bool)
    n = len(cover)
    for size in range(0, n + 1):
        for subset in itertools.combinations(range(n), size):
            if cover[list(subset)].any(axis=0).all() if subset else cover.shape[1] == 0:
                return size
    return -1


def brute_force_hull_faces(points, tol=1e-9) -> set[frozenset]:
    """Triangles whose plane has every other point on one side."""
    pts = np.asarray(points, dtype=float)
    faces = set()
    for i, j, k in itertools.combinations(range(len(pts)), 3):
        n = np.cross(pts[j] - pts[i], pts[k] - pts[i])
        if np.linalg.norm(n) < tol:
            continue
        s = (pts - pts[i]) @ n
        s[[i, j, k]] = 0.0
        if np.all(s <= tol) or np.all(s >= -tol):
            faces.add(frozenset((i, j, k)))
    return faces


def reachable(n_vertices, edges, removed, start) -> set[int]:
    adj = [[] for _ in range(n_vertices)]
    removed = {tuple(sorted(e)) for e in removed}
    for u, v in np.asarray(edges):
        if (min(u, v), max(u, v)) in removed:
            continue
        adj[u].append(v)
        adj[v].append(u)
    seen, stack = set(start), list(start)
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen
