"""Minimum-area vertical barrier around the contaminated cells.

The grid's dual-loop formulation is solved as the equivalent primal s-t cut:
contaminated cells are pinned to a super-source, the outer ring of the map
to a super-sink, and edge capacities are barrier areas (m^2) scaled to
integers at 1e-6 m^2 resolution. Max-flow uses Dinic's blocking flows
(shortest augmenting paths); adjacency is scanned in increasing vertex
order so the resulting cut is deterministic.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .barrier_cover import BarrierSegment
from .bathymetry import DepthMap
from .errors import ContainmentImpossible, ParameterError

__all__ = [
    "BarrierGraph",
    "CutResult",
    "COST_SCALE",
    "build_barrier_graph",
    "min_cut",
    "cut_to_barrier_segments",
    "enclosed_area",
    "write_cut_csv",
    "write_cut_polyline",
    "read_cut_polyline",
]

COST_SCALE = 1_000_000  # integer capacity units per m^2


@dataclass(frozen=True, eq=False)
class BarrierGraph:
    """Undirected graph with non-negative edge costs and pinned terminals.

    ``edges`` is an (E, 2) array of vertex indices; for graphs built from a
    map, vertex ``i`` is cell ``divmod(i, width)``.
    """

    n_vertices: int
    edges: np.ndarray
    costs: np.ndarray
    source_set: frozenset[int]
    sink_set: frozenset[int]
    shape: tuple[int, int] | None = None
    cell_size: float | None = None

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        costs = np.asarray(self.costs, dtype=float).reshape(-1)
        if len(edges) != len(costs):
            raise ParameterError("one cost per edge required")
        if len(costs) and (not np.all(np.isfinite(costs)) or costs.min() < 0):
            raise ParameterError("edge costs must be finite and >= 0")
        if len(edges) and (edges.min() < 0 or edges.max() >= self.n_vertices):
            raise ParameterError("edge endpoint out of range")
        src, snk = frozenset(map(int, self.source_set)), frozenset(map(int, self.sink_set))
        if not src:
            raise ParameterError("source set is empty")
        if not snk:
            raise ParameterError("sink set is empty")
        if src & snk:
            raise ParameterError(f"source and sink overlap at {sorted(src & snk)[:5]}")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "source_set", src)
        object.__setattr__(self, "sink_set", snk)


@dataclass(frozen=True, eq=False)
class CutResult:
    cut_edges: list[tuple[int, int]]
    total_cost: float
    flow_value: float
    scaled_cost: int
    side_labels: np.ndarray  # True on the source (contaminated) side
    edge_ids: list[int] = field(default_factory=list)
    costs: list[float] = field(default_factory=list)


def build_barrier_graph(depth_map: DepthMap, contaminated) -> BarrierGraph:
    """4-connected grid graph with barrier-area edge costs.

    An edge between adjacent cells costs ``dist * (d_i + d_j) / 2`` m^2, the
    area of a wall from the surface to the mean seabed depth under it.
    """
    cells = list(contaminated)
    if not cells:
        raise ParameterError("contaminated cell set is empty")
    h, w, cs = depth_map.height, depth_map.width, depth_map.cell_size
    for cell in cells:
        r, c = cell
        if not (0 <= r < h and 0 <= c < w):
            raise ParameterError(f"contaminated cell {cell} outside the map")
        if depth_map.on_boundary(cell):
            raise ContainmentImpossible(f"contaminated cell {cell} lies on the map boundary")
    idx = np.arange(h * w).reshape(h, w)
    right = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    down = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    edges = np.concatenate([right, down])
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    d = depth_map.depths.ravel()
    costs = cs * (d[edges[:, 0]] + d[edges[:, 1]]) / 2
    ring = np.zeros((h, w), dtype=bool)
    ring[0, :] = ring[-1, :] = ring[:, 0] = ring[:, -1] = True
    return BarrierGraph(
        n_vertices=h * w,
        edges=edges,
        costs=costs,
        source_set=frozenset(depth_map.index(cell) for cell in cells),
        sink_set=frozenset(int(i) for i in idx[ring]),
        shape=(h, w),
        cell_size=cs,
    )


def _scaled(costs: np.ndarray) -> list[int]:
    return [int(v) for v in np.rint(costs * COST_SCALE).astype(np.int64)]


def min_cut(graph: BarrierGraph) -> CutResult:
    n = graph.n_vertices
    S, T = n, n + 1
    caps = _scaled(graph.costs)
    inf = sum(caps) + 1
    head: list[int] = []
    cap: list[int] = []
    adj: list[list[int]] = [[] for _ in range(n + 2)]

    def add_arc_pair(u, v, c_uv, c_vu):
        a = len(head)
        head.extend((v, u))
        cap.extend((c_uv, c_vu))
        adj[u].append(a)
        adj[v].append(a + 1)

    for (u, v), c in zip(graph.edges.tolist(), caps):
        add_arc_pair(u, v, c, c)
    for s in sorted(graph.source_set):
        add_arc_pair(S, s, inf, 0)
    for t in sorted(graph.sink_set):
        add_arc_pair(t, T, inf, 0)
    for lst in adj:
        lst.sort(key=lambda a: head[a])

    flow = 0
    while True:
        level = _bfs_levels(adj, head, cap, S, n + 2)
        if level[T] < 0:
            break
        flow += _blocking_flow(adj, head, cap, level, S, T)

    level = _bfs_levels(adj, head, cap, S, n + 2)
    side = np.array([lv >= 0 for lv in level[:n]], dtype=bool)
    cut_ids = [
        e for e, (u, v) in enumerate(graph.edges.tolist()) if side[u] != side[v]
    ]
    scaled = sum(caps[e] for e in cut_ids)
    if scaled != flow:
        raise AssertionError(f"cut capacity {scaled} differs from max flow {flow}")
    cut_costs = [float(graph.costs[e]) for e in cut_ids]
    return CutResult(
        cut_edges=[tuple(int(x) for x in graph.edges[e]) for e in cut_ids],
        total_cost=float(sum(cut_costs)),
        flow_value=flow / COST_SCALE,
        scaled_cost=scaled,
        side_labels=side,
        edge_ids=cut_ids,
        costs=cut_costs,
    )


def _bfs_levels(adj, head, cap, src, n_nodes) -> list[int]:
    level = [-1] * n_nodes
    level[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for a in adj[u]:
            v = head[a]
            if cap[a] > 0 and level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    return level


def _blocking_flow(adj, head, cap, level, S, T) -> int:
    it = [0] * len(adj)
    total = 0
    stack: list[int] = []  # arcs along the current path
    v = S
    while True:
        if v == T:
            push = min(cap[a] for a in stack)
            for a in stack:
                cap[a] -= push
                cap[a ^ 1] += push
            total += push
            # retreat to the tail of the first saturated arc
            k = next(i for i, a in enumerate(stack) if cap[a] == 0)
            del stack[k:]
            v = S if not stack else head[stack[-1]]
            continue
        arcs = adj[v]
        advanced = False
        while it[v] < len(arcs):
            a = arcs[it[v]]
            w = head[a]
            if cap[a] > 0 and level[w] == level[v] + 1:
                stack.append(a)
                v = w
                advanced = True
                break
            it[v] += 1
        if advanced:
            continue
        if v == S:
            return total
        level[v] = -1
        a = stack.pop()
        v = head[a ^ 1]
        it[v] += 1


def cut_to_barrier_segments(cut: CutResult, depth_map: DepthMap) -> list[BarrierSegment]:
    """One vertical wall per nonzero-cost cut edge, on the shared cell border."""
    cs = depth_map.cell_size
    segments = []
    for (u, v), cost in zip(cut.cut_edges, cut.costs):
        if cost == 0.0:
            continue
        if not cut.side_labels[u]:
            u, v = v, u
        (r1, c1), (r2, c2) = depth_map.cell_of_index(u), depth_map.cell_of_index(v)
        start, end = _dual_segment(r1, c1, r2, c2, cs)
        depth = (depth_map.depths[r1, c1] + depth_map.depths[r2, c2]) / 2
        segments.append(
            BarrierSegment(
                base_start=start,
                base_end=end,
                depth=float(depth),
                width=cs,
                exterior=(float(c2 - c1), float(r2 - r1)),
            )
        )
    return segments


def _dual_segment(r1, c1, r2, c2, cs):
    if r1 == r2:
        x = max(c1, c2) * cs
        return (x, r1 * cs), (x, (r1 + 1) * cs)
    y = max(r1, r2) * cs
    return (c1 * cs, y), ((c1 + 1) * cs, y)


def enclosed_area(cut: CutResult, depth_map: DepthMap) -> float:
    """Horizontal area (m^2) of the source-side cells."""
    return float(np.count_nonzero(cut.side_labels)) * depth_map.cell_size**2


def write_cut_csv(path, cut: CutResult, depth_map: DepthMap) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u_row", "u_col", "v_row", "v_col", "cost"])
        for (u, v), cost in zip(cut.cut_edges, cut.costs):
            writer.writerow([*depth_map.cell_of_index(u), *depth_map.cell_of_index(v), repr(cost)])


def write_cut_polyline(path, cut: CutResult, depth_map: DepthMap) -> None:
    """Dual segments of every cut edge in map coordinates, land edges flagged."""
    cs = depth_map.cell_size
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x0", "y0", "x1", "y1", "cost", "on_land"])
        for (u, v), cost in zip(cut.cut_edges, cut.costs):
            (r1, c1), (r2, c2) = depth_map.cell_of_index(u), depth_map.cell_of_index(v)
            (x0, y0), (x1, y1) = _dual_segment(r1, c1, r2, c2, cs)
            writer.writerow([repr(x0), repr(y0), repr(x1), repr(y1), repr(cost), int(cost == 0.0)])


def read_cut_polyline(path) -> list[dict]:
    with open(Path(path), newline="") as fh:
        return [
            {
                "start": (float(row["x0"]), float(row["y0"])),
                "end": (float(row["x1"]), float(row["y1"])),
                "cost": float(row["cost"]),
                "on_land": row["on_land"] == "1",
            }
            for row in csv.DictReader(fh)
        ]
