"""Sighting-driven cage selection and shrink trajectories."""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..assignment import Assignment, solve_lbap, travel_time_matrix
from ..barrier_cover import CoverSolution, cover_barrier
from ..bathymetry import ContaminatedSet, DepthMap, Sighting, ball_cells, contaminated_radius
from ..errors import ContainmentImpossible, InfeasibleCover, ParameterError, TemporalOrderError
from ..graphcut import CutResult, build_barrier_graph, cut_to_barrier_segments, enclosed_area, min_cut
from ..sensors import AuvPose, SensorModel
from ..spherical_cage import SphericalCage, build_spherical_cage, cone_poses

__all__ = [
    "EVENT_KINDS",
    "Event",
    "PlannerOptions",
    "ContainingPlan",
    "CapturingPlan",
    "Decision",
    "MissionState",
    "ShrinkPlan",
    "plan_capture",
    "plan_contain",
    "on_sighting",
    "shrink_trajectories",
    "wall_poses",
    "sphere_fits",
]

log = logging.getLogger(__name__)

EVENT_KINDS = (
    "sighting",
    "plan_contain",
    "plan_capture",
    "wait",
    "cage_closed",
    "cage_verified",
    "shrink_start",
    "captured",
    "escaped",
    "exhausted",
)


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ParameterError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class PlannerOptions:
    seed: int = 0
    safety_margin: float = 0.05
    cover_spacing: float | None = None
    n_verify: int = 4000
    max_cage_agents: int | None = 30
    radius_grid: int = 24
    enclosure_step: float | None = None  # default: one cell
    relax: tuple = ()  # extra relax_charges keyword pairs

    def __post_init__(self):
        if not 0 <= self.safety_margin < 1:
            raise ParameterError(f"safety margin must lie in [0, 1), got {self.safety_margin}")


@dataclass(frozen=True, eq=False)
class ContainingPlan:
    kind = "contain"
    cells: frozenset
    cut: CutResult
    segments: list
    cover: CoverSolution
    slots: list[AuvPose]
    assignment: Assignment
    deadline: float  # absolute time by which the walls must be manned
    area: float
    planned_at: float


@dataclass(frozen=True, eq=False)
class CapturingPlan:
    kind = "capture"
    cage: SphericalCage
    slots: list[AuvPose]
    assignment: Assignment
    deadline: float
    planned_at: float

    @property
    def area(self) -> float:
        return math.pi * self.cage.radius**2


@dataclass(frozen=True, eq=False)
class Decision:
    action: str  # "go_capture" | "go_contain" | "wait"
    plan: ContainingPlan | CapturingPlan | None = None
    reason: str = ""


@dataclass(eq=False)
class MissionState:
    clock: float
    auvs: list[AuvPose]
    depth_map: DepthMap
    v_e: float
    v_p: float
    sensor: SensorModel
    options: PlannerOptions = field(default_factory=PlannerOptions)
    active_cage: ContainingPlan | CapturingPlan | None = None
    contaminated: ContaminatedSet | None = None
    event_log: list[Event] = field(default_factory=list)

    def log(self, kind: str, time: float | None = None, **payload) -> Event:
        t = self.clock if time is None else time
        if self.event_log and t < self.event_log[-1].time:
            raise TemporalOrderError(f"event at {t} precedes {self.event_log[-1].time}")
        ev = Event(float(t), kind, payload)
        self.event_log.append(ev)
        return ev

    @property
    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.auvs]).reshape(-1, 3)


def _lbap(agents, slots, v_p):
    """LBAP on travel times; an immobile fleet only reaches slots it occupies."""
    if v_p > 0:
        return solve_lbap(travel_time_matrix(agents, slots, v_p))
    d = np.linalg.norm(agents[:, None, :] - slots[None, :, :], axis=-1)
    return solve_lbap(np.where(d == 0.0, 0.0, 1e300))


def sphere_fits(depth_map: DepthMap, center, radius: float) -> bool:
    """Whether the closed ball lies in free space (conservatively, per cell)."""
    x, y, z = (float(v) for v in center)
    w, h = depth_map.extent
    if radius < 0 or z + radius > 0:
        return False
    if x - radius < 0 or y - radius < 0 or x + radius > w or y + radius > h:
        return False
    cs = depth_map.cell_size
    c0, c1 = int((x - radius) // cs), min(int((x + radius) // cs), depth_map.width - 1)
    r0, r1 = int((y - radius) // cs), min(int((y + radius) // cs), depth_map.height - 1)
    for r in range(r0, r1 + 1):
        for c in range(c0, c1 + 1):
            # nearest point of the cell rectangle to the ball center
            dx = max(c * cs - x, 0.0, x - (c + 1) * cs)
            dy = max(r * cs - y, 0.0, y - (r + 1) * cs)
            rho2 = dx * dx + dy * dy
            if rho2 > radius * radius:
                continue
            if z - math.sqrt(radius * radius - rho2) < -depth_map.depths[r, c]:
                return False
    return True


@functools.lru_cache(maxsize=256)
def _unit_cage(n: int, r_s: float, seed: int, n_verify: int, relax: tuple) -> SphericalCage:
    return build_spherical_cage(n, r_s, seed=seed, n_verify=n_verify, **dict(relax))


def _capture_slots(cage: SphericalCage, sensor: SensorModel) -> list[AuvPose]:
    return cone_poses(cage, sensor.h, sensor)


def plan_capture(state: MissionState, sighting: Sighting) -> CapturingPlan | None:
    """Largest reachable spherical cage around the sighting, if any.

    For each candidate fleet size the verified formation radius caps the
    cage; the cage is further capped by free space. A radius ``R`` is
    reachable when the LBAP bottleneck to the formation beats the moment
    the growth ball reaches ``R``, less the safety margin.
    """
    opts = state.options
    n_avail = len(state.auvs)
    if opts.max_cage_agents is not None:
        n_avail = min(n_avail, opts.max_cage_agents)
    if n_avail < 4:
        return None
    sensor = state.sensor
    center = np.asarray(sighting.position)
    elapsed = state.clock - sighting.time
    agents = state.positions

    def deadline(radius):
        if state.v_e == 0:
            return math.inf
        return (radius / state.v_e - elapsed) * (1 - opts.safety_margin)

    def attempt(cage, radius):
        scaled = cage.scaled(radius)
        slots = _capture_slots(scaled, sensor)
        targets = np.array([s.position for s in slots])
        if state.v_p > 0:
            # column-minimum lower bound on the bottleneck rejects cheaply
            d = np.linalg.norm(agents[:, None, :] - targets[None, :, :], axis=-1)
            if d.min(axis=0).max() / state.v_p > deadline(radius):
                return False, scaled, slots, None
        a = _lbap(agents, targets, state.v_p)
        return a.bottleneck <= deadline(radius), scaled, slots, a

    sizes = sorted(
        range(4, n_avail + 1),
        key=lambda n: -_unit_cage(n, sensor.r_s, opts.seed, opts.n_verify, opts.relax).radius,
    )
    for n in sizes:
        unit = _unit_cage(n, sensor.r_s, opts.seed, opts.n_verify, opts.relax)
        unit = unit.centered_at(center)
        r_hi = unit.radius
        if not sphere_fits(state.depth_map, center, r_hi + sensor.h):
            lo, hi = 0.0, r_hi
            for _ in range(40):
                mid = (lo + hi) / 2
                lo, hi = (mid, hi) if sphere_fits(state.depth_map, center, mid + sensor.h) else (lo, mid)
            r_hi = lo
        if r_hi <= 0:
            continue
        best = None
        ok, *rest = attempt(unit, r_hi)
        if ok:
            best = (r_hi, *rest)
        else:
            grid = [r_hi * j / opts.radius_grid for j in range(opts.radius_grid - 1, 0, -1)]
            upper = r_hi
            for r in grid:
                ok, *rest = attempt(unit, r)
                if ok:
                    lo, hi = r, upper
                    best = (r, *rest)
                    for _ in range(20):
                        mid = (lo + hi) / 2
                        ok, *rest = attempt(unit, mid)
                        if ok:
                            lo, best = mid, (mid, *rest)
                        else:
                            hi = mid
                    break
                upper = r
        if best is None:
            continue
        radius, cage, slots, assignment = best
        return CapturingPlan(
            cage=cage,
            slots=slots,
            assignment=assignment,
            deadline=state.clock + deadline(radius),
            planned_at=state.clock,
        )
    return None


def wall_poses(cover: CoverSolution, sensor: SensorModel) -> list[AuvPose]:
    """Sensor poses for wall discs: cones sit ``h`` outside the wall, looking in."""
    poses = []
    for c, n in zip(cover.disc_centers, cover.normals):
        n = np.asarray(n, dtype=float)
        poses.append(AuvPose(c + sensor.h * n, -n, sensor))
    return poses


@dataclass(frozen=True)
class ContainFailure:
    reason: str
    bottleneck: float = math.nan
    deadline: float = math.nan
    slots: int = 0


def plan_contain(state: MissionState, sighting: Sighting):
    """Smallest reachable containing cage around the sighting.

    Enclosures grow one cell at a time from the current growth ball until
    a min-cut wall can be manned before the ball reaches it. Returns
    ``(plan, None)`` or ``(None, ContainFailure)``; raises
    ContainmentImpossible if the current ball already touches the map edge.
    """
    opts = state.options
    m = state.depth_map
    r_now = contaminated_radius(ContaminatedSet(sighting, state.v_e, m), state.clock)
    ball_cells(m, sighting.position, r_now)  # raises when already off the map
    elapsed = state.clock - sighting.time
    step = opts.enclosure_step or m.cell_size
    xy = np.asarray(sighting.position[:2])
    agents = state.positions
    failure = ContainFailure("no enclosure fits inside the map")
    seen_cuts = set()
    j = 0
    while True:
        radius = r_now + j * step
        j += 1
        try:
            cells = ball_cells(m, sighting.position, radius)
            graph = build_barrier_graph(m, cells)
        except ContainmentImpossible:
            break
        cut = min_cut(graph)
        key = tuple(cut.edge_ids)
        if key in seen_cuts:
            continue
        seen_cuts.add(key)
        segments = cut_to_barrier_segments(cut, m)
        if segments:
            d_min = min(_point_segment_distance(xy, s.base_start, s.base_end) for s in segments)
            dl = math.inf if state.v_e == 0 else (d_min / state.v_e - elapsed) * (1 - opts.safety_margin)
        else:
            dl = math.inf
        if dl < 0:
            failure = ContainFailure("contamination already reached the walls", deadline=dl)
            continue
        try:
            cover = cover_barrier(segments, state.sensor.r_s, opts.cover_spacing)
        except InfeasibleCover as exc:
            failure = ContainFailure(f"cover infeasible: {exc}")
            continue
        slots = wall_poses(cover, state.sensor)
        if len(slots) > len(agents):
            failure = ContainFailure("insufficient agents", slots=len(slots), deadline=dl)
            continue
        assignment = _lbap(agents, np.array([s.position for s in slots]).reshape(-1, 3), state.v_p)
        if assignment.bottleneck > dl:
            failure = ContainFailure("walls unreachable in time", assignment.bottleneck, dl, len(slots))
            continue
        plan = ContainingPlan(
            cells=frozenset(cells),
            cut=cut,
            segments=segments,
            cover=cover,
            slots=slots,
            assignment=assignment,
            deadline=state.clock + dl,
            area=enclosed_area(cut, m),
            planned_at=state.clock,
        )
        return plan, None
    return None, failure


def _point_segment_distance(p, a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    ab = b - a
    t = float(np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def on_sighting(state: MissionState, sighting: Sighting, source: str = "scripted") -> Decision:
    """React to a sighting: capture if possible, else contain tighter, else wait."""
    if sighting.time < state.clock:
        raise TemporalOrderError(f"sighting at {sighting.time} precedes clock {state.clock}")
    if not state.depth_map.in_free_space(sighting.position):
        raise ParameterError(f"sighting {sighting.position} is outside free space")
    state.clock = sighting.time
    state.contaminated = ContaminatedSet(sighting, state.v_e, state.depth_map)
    state.log("sighting", position=list(sighting.position), source=source)

    capture = plan_capture(state, sighting)
    if capture is not None:
        handoff = isinstance(state.active_cage, ContainingPlan)
        state.active_cage = capture
        state.log(
            "plan_capture",
            n=capture.cage.n,
            radius=capture.cage.radius,
            bottleneck=capture.assignment.bottleneck,
            deadline=capture.deadline,
            containment_gap=handoff,
        )
        return Decision("go_capture", capture)

    try:
        contain, failure = plan_contain(state, sighting)
    except ContainmentImpossible:
        if state.active_cage is None:
            raise
        contain, failure = None, ContainFailure("growth ball left the map")
    if contain is not None:
        current = state.active_cage
        if current is None or contain.area < current.area:
            state.active_cage = contain
            state.log(
                "plan_contain",
                walls=len(contain.segments),
                cut_edges=len(contain.cut.cut_edges),
                discs=len(contain.slots),
                area=contain.area,
                bottleneck=contain.assignment.bottleneck,
                deadline=contain.deadline,
            )
            return Decision("go_contain", contain)
        failure = ContainFailure("no smaller containing cage")
    reason = failure.reason if failure else ""
    state.log("wait", reason=reason)
    return Decision("wait", None, reason)


@dataclass(frozen=True, eq=False)
class ShrinkPlan:
    """Radial shrink of a verified cage; ``positions[k, j]`` is slot ``j`` at ``times[k]``."""

    times: np.ndarray
    radii: np.ndarray
    positions: np.ndarray
    slot_to_agent: tuple[int, ...]

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def waypoints(self) -> dict[int, list[tuple[float, np.ndarray]]]:
        """Timed waypoints per agent after the start pose; empty when no shrink is needed."""
        return {
            agent: [(float(t), self.positions[k, slot]) for k, t in enumerate(self.times) if k > 0]
            for slot, agent in enumerate(self.slot_to_agent)
        }

    def at(self, t: float) -> tuple[float, np.ndarray]:
        """Radius and slot positions ``t`` seconds into the shrink."""
        t = min(max(t, 0.0), self.duration)
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(k, len(self.times) - 1)
        if k == len(self.times) - 1 or self.times[k] == t:
            return float(self.radii[k]), self.positions[k]
        f = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        radius = self.radii[k] + f * (self.radii[k + 1] - self.radii[k])
        return float(radius), self.positions[k] + f * (self.positions[k + 1] - self.positions[k])


def shrink_trajectories(
    cage: SphericalCage,
    assignment: Assignment,
    v_p: float,
    capture_radius: float,
    timestep: float,
    shrink_speed: float | None = None,
    h: float = 0.0,
) -> ShrinkPlan:
    """Uniform radial shrink until the cage radius reaches ``capture_radius``."""
    if not v_p > 0:
        raise ParameterError(f"v_p must be > 0, got {v_p}")
    if capture_radius > cage.radius:
        raise ParameterError(f"capture radius {capture_radius} exceeds cage radius {cage.radius}")
    if not timestep > 0:
        raise ParameterError(f"timestep must be > 0, got {timestep}")
    speed = v_p if shrink_speed is None else min(v_p, shrink_speed)
    duration = (cage.radius - capture_radius) / speed
    n_full = int(math.floor(duration / timestep + 1e-12))
    times = [k * timestep for k in range(n_full + 1)]
    if duration - times[-1] > 1e-12:
        times.append(duration)
    times = np.array(times)
    radii = np.maximum(cage.radius - speed * times, capture_radius)
    radii[-1] = capture_radius if duration > 0 else cage.radius
    u = cage.unit_points
    positions = cage.origin + (radii[:, None, None] + h) * u[None, :, :]
    return ShrinkPlan(times, radii, positions, assignment.slot_to_agent)
