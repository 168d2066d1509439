"""Linear bottleneck assignment of agents to cage slots.

The bottleneck is found by binary search over the sorted distinct costs;
each threshold is tested with a maximum bipartite matching (Kuhn's
augmenting paths, slots and agents scanned in index order).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientAgents, ParameterError

__all__ = [
    "Assignment",
    "travel_time",
    "travel_time_matrix",
    "solve_lbap",
    "is_reachable_cage",
    "write_assignment_csv",
    "read_assignment_csv",
]


@dataclass(frozen=True)
class Assignment:
    """``slot_to_agent[j]`` is the agent filling slot ``j``."""

    slot_to_agent: tuple[int, ...]
    bottleneck: float
    slot_costs: tuple[float, ...] = ()

    @property
    def agent_to_slot(self) -> dict[int, int]:
        return {a: s for s, a in enumerate(self.slot_to_agent)}


def travel_time(start, goal, v_p: float) -> float:
    if not v_p > 0:
        raise ParameterError(f"AUV speed must be > 0, got {v_p}")
    return math.dist(tuple(map(float, start)), tuple(map(float, goal))) / v_p


def travel_time_matrix(agents, slots, v_p: float) -> np.ndarray:
    if not v_p > 0:
        raise ParameterError(f"AUV speed must be > 0, got {v_p}")
    a = np.asarray(agents, dtype=float).reshape(-1, 3)
    s = np.asarray(slots, dtype=float).reshape(-1, 3)
    return np.linalg.norm(a[:, None, :] - s[None, :, :], axis=-1) / v_p


def _check_costs(costs) -> np.ndarray:
    c = np.asarray(costs, dtype=float)
    if c.ndim != 2:
        raise ParameterError(f"cost matrix must be 2D, got shape {c.shape}")
    if c.size and (not np.all(np.isfinite(c)) or c.min() < 0):
        raise ParameterError("costs must be finite and >= 0")
    return c


def _match(allowed: np.ndarray) -> list[int] | None:
    """Slot-saturating matching on a boolean (agents x slots) mask, or None."""
    n_agents, n_slots = allowed.shape
    options = [np.flatnonzero(allowed[:, j]).tolist() for j in range(n_slots)]
    agent_slot = [-1] * n_agents
    slot_agent = [-1] * n_slots
    for root in range(n_slots):
        # iterative DFS for an augmenting path from slot `root`
        seen = [False] * n_agents
        stack = [(root, 0)]
        trail: list[tuple[int, int]] = []
        found = False
        while stack:
            j, k = stack.pop()
            opts = options[j]
            while k < len(opts) and seen[opts[k]]:
                k += 1
            if k == len(opts):
                if trail:
                    trail.pop()
                continue
            a = opts[k]
            seen[a] = True
            stack.append((j, k + 1))
            trail.append((j, a))
            if agent_slot[a] < 0:
                found = True
                break
            stack.append((agent_slot[a], 0))
        if not found:
            return None
        for j, a in trail:
            slot_agent[j] = a
            agent_slot[a] = j
    return slot_agent


def solve_lbap(costs) -> Assignment:
    """Assignment minimizing the largest individual cost (rows = agents)."""
    c = _check_costs(costs)
    n_agents, n_slots = c.shape
    if n_agents < n_slots:
        raise InsufficientAgents(f"{n_agents} agents cannot fill {n_slots} slots")
    if n_slots == 0:
        return Assignment((), 0.0, ())
    values = np.unique(c)
    # the bottleneck is at least the largest per-slot minimum
    lo = int(np.searchsorted(values, c.min(axis=0).max()))
    hi = len(values) - 1
    best = _match(c <= values[hi])
    while lo < hi:
        mid = (lo + hi) // 2
        m = _match(c <= values[mid])
        if m is None:
            lo = mid + 1
        else:
            hi, best = mid, m
    if lo != hi or best is None:
        raise AssertionError("threshold search failed")
    best = _match(c <= values[lo])
    slot_costs = tuple(float(c[a, j]) for j, a in enumerate(best))
    return Assignment(tuple(best), float(values[lo]), slot_costs)


def is_reachable_cage(agents, slots, v_p: float, deadline: float) -> tuple[bool, Assignment]:
    """Whether every slot can be filled within ``deadline`` seconds."""
    if not deadline >= 0:
        raise ParameterError(f"deadline must be >= 0, got {deadline}")
    assignment = solve_lbap(travel_time_matrix(agents, slots, v_p))
    return assignment.bottleneck <= deadline, assignment


def write_assignment_csv(path, assignment: Assignment) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "slot", "cost", "bottleneck"])
        for slot, agent in enumerate(assignment.slot_to_agent):
            cost = assignment.slot_costs[slot]
            writer.writerow([agent, slot, repr(cost), int(cost == assignment.bottleneck)])


def read_assignment_csv(path) -> Assignment:
    with open(path, newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["slot"]))
    agents = tuple(int(r["agent"]) for r in rows)
    costs = tuple(float(r["cost"]) for r in rows)
    return Assignment(agents, max(costs, default=0.0), costs)
