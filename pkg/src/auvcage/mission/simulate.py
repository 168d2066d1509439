"""Fixed-step, sighting-driven mission simulator."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..bathymetry import Sighting
from ..errors import ContainmentImpossible
from ..sensors import AuvPose, covered_by_any
from ..spherical_cage import sphere_gap
from .partition import cage_component, trace_step
from .planner import (
    CapturingPlan,
    ContainingPlan,
    Event,
    MissionState,
    PlannerOptions,
    on_sighting,
    shrink_trajectories,
    sphere_fits,
)
from .scenario import Scenario

__all__ = ["SimulationResult", "simulate", "write_event_log", "read_event_log", "OUTCOMES"]

log = logging.getLogger(__name__)

OUTCOMES = ("captured", "contained", "escaped", "exhausted")
_AT = 1e-9  # arrival tolerance, meters


@dataclass(frozen=True, eq=False)
class SimulationResult:
    outcome: str
    events: list[Event]
    times: np.ndarray  # (T,)
    auv_positions: np.ndarray  # (T, n, 3)
    entity_positions: np.ndarray  # (T, 3)
    cage_radius: np.ndarray  # (T,) capturing-cage radius, nan when none

    @property
    def final_event(self) -> str:
        return self.events[-1].kind if self.events else ""


def _payload(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj)}")


def write_event_log(path, events) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "event_kind", "payload"])
        for ev in events:
            writer.writerow([repr(ev.time), ev.kind, json.dumps(ev.payload, sort_keys=True, default=_payload)])


def read_event_log(path) -> list[Event]:
    with open(path, newline="") as fh:
        return [Event(float(r["time"]), r["event_kind"], json.loads(r["payload"])) for r in csv.DictReader(fh)]


class _Mission:
    """Mutable simulation state; one instance per ``simulate`` call."""

    def __init__(self, scenario: Scenario, options: PlannerOptions):
        self.sc = scenario
        sensor = scenario.sensor
        down = np.array([0.0, 0.0, -1.0])
        auvs = [AuvPose(p, down, sensor) for p in scenario.starts]
        self.state = MissionState(
            clock=0.0,
            auvs=auvs,
            depth_map=scenario.depth_map,
            v_e=scenario.v_e,
            v_p=scenario.v_p,
            sensor=sensor,
            options=options,
        )
        self.targets: list[AuvPose | None] = [None] * len(auvs)
        self.plan: ContainingPlan | CapturingPlan | None = None
        self.phase: str | None = None  # closing | verified | shrinking
        self.component = None
        self.shrink = None
        self.shrink_t0 = 0.0
        self.sensed_run = 0
        self.pending = [(t, None, "scripted") for t in scenario.sightings]

    # planning
    def handle_sightings(self, t: float) -> None:
        while self.pending and self.pending[0][0] <= t + 1e-12:
            ts, pos, source = self.pending.pop(0)
            if self.phase == "shrinking":
                continue  # the shrinking cage already tracks the entity
            pos = self.sc.entity_at(ts) if pos is None else pos
            self.state.clock = max(self.state.clock, ts)
            try:
                decision = on_sighting(self.state, Sighting(tuple(pos), self.state.clock), source)
            except ContainmentImpossible as exc:
                self.state.log("wait", reason=str(exc))
                continue
            if decision.plan is not None:
                self.adopt(decision.plan)

    def adopt(self, plan) -> None:
        self.plan = plan
        self.phase = "closing"
        self.component = None
        self.shrink = None
        self.targets = [None] * len(self.state.auvs)
        for slot, agent in enumerate(plan.assignment.slot_to_agent):
            self.targets[agent] = plan.slots[slot]

    def closed(self) -> bool:
        return all(
            tgt is None or np.linalg.norm(a.position - tgt.position) <= _AT
            for a, tgt in zip(self.state.auvs, self.targets)
        )

    def on_closure(self, t: float) -> str | None:
        st = self.state
        st.auvs = [tgt if tgt is not None else a for a, tgt in zip(st.auvs, self.targets)]
        plan = self.plan
        entity = self.sc.entity_at(t)
        st.log("cage_closed", time=t, cage=plan.kind)
        if isinstance(plan, ContainingPlan):
            self.component = cage_component(st.auvs, st.depth_map, plan.cells)
            if self.component.reached_boundary:
                st.log("wait", time=t, reason="closed cage leaks")
                self.plan = self.phase = st.active_cage = None
                return None
            st.log("cage_verified", time=t, cage="contain", area=plan.area)
            self.phase = "verified"
            if not self.component.contains(entity):
                st.log("escaped", time=t, position=entity, reason="entity outside the closed cage")
                return "escaped"
            return None
        cage = plan.cage
        r_s, h = st.sensor.r_s, st.sensor.h
        if sphere_gap(cage) > r_s or not sphere_fits(st.depth_map, cage.origin, cage.radius + h):
            st.log("wait", time=t, reason="capturing cage failed verification")
            self.plan = self.phase = st.active_cage = None
            return None
        st.log("cage_verified", time=t, cage="capture", radius=cage.radius, n=cage.n)
        if np.linalg.norm(entity - cage.origin) > cage.radius and not covered_by_any(st.auvs, entity[None])[0]:
            st.log("escaped", time=t, position=entity, reason="entity outside the closed cage")
            return "escaped"
        capture_radius = min(r_s, cage.radius)
        self.shrink = shrink_trajectories(
            cage, plan.assignment, max(st.v_p, 1e-300), capture_radius, self.sc.timestep, self.sc.shrink_speed, h
        )
        self.shrink_t0 = t
        self.phase = "shrinking"
        self.pending = [p for p in self.pending if p[0] > t + 1e-12 and p[2] != "scripted"]
        st.log("shrink_start", time=t, radius=cage.radius, capture_radius=capture_radius, duration=self.shrink.duration)
        return None

    # motion
    def move_auvs(self, t0: float, t1: float) -> None:
        st = self.state
        if self.phase == "shrinking":
            _, pos = self.shrink.at(t1 - self.shrink_t0)
            for slot, agent in enumerate(self.shrink.slot_to_agent):
                st.auvs[agent] = st.auvs[agent].moved_to(pos[slot])
            return
        budget = st.v_p * (t1 - t0)
        moved = []
        for a, tgt in zip(st.auvs, self.targets):
            if tgt is None:
                moved.append(a)
                continue
            d = tgt.position - a.position
            dist = float(np.linalg.norm(d))
            if dist <= budget + _AT:
                moved.append(tgt if dist <= budget else a.moved_to(a.position + d * (budget / dist)))
            else:
                moved.append(a.moved_to(a.position + d * (budget / dist)))
        st.auvs = moved

    def shrink_radius(self, t: float) -> float:
        return self.shrink.at(t - self.shrink_t0)[0]


def simulate(scenario: Scenario, options: PlannerOptions | None = None) -> SimulationResult:
    """Run a scenario to capture, escape or the horizon."""
    if options is None:
        options = PlannerOptions(seed=scenario.seed, safety_margin=scenario.safety_margin, n_verify=scenario.n_verify)
    m = _Mission(scenario, options)
    st = m.state
    dt, horizon = scenario.timestep, scenario.horizon
    t = 0.0
    times, auv_pos, ent_pos, radii = [], [], [], []

    def record(tt):
        times.append(tt)
        auv_pos.append(st.positions.copy())
        ent_pos.append(scenario.entity_at(tt))
        if m.phase == "shrinking":
            radii.append(m.shrink_radius(tt))
        elif isinstance(m.plan, CapturingPlan):
            radii.append(m.plan.cage.radius)
        else:
            radii.append(math.nan)

    outcome = None
    record(t)
    while outcome is None:
        st.clock = max(st.clock, t)
        m.handle_sightings(t)
        if m.phase == "closing" and m.closed():
            outcome = m.on_closure(t)
            if outcome:
                break
        if m.phase == "shrinking" and t - m.shrink_t0 >= m.shrink.duration - 1e-12:
            entity = scenario.entity_at(t)
            m.sensed_run = m.sensed_run + 1 if covered_by_any(st.auvs, entity[None])[0] else 0
            if m.sensed_run >= 2:
                st.log("captured", time=t, position=entity, radius=m.shrink_radius(t))
                outcome = "captured"
                break
        if t >= horizon - 1e-12:
            if m.phase == "verified" and isinstance(m.plan, ContainingPlan):
                outcome = "contained"
            else:
                st.log("exhausted", time=t)
                outcome = "exhausted"
            break
        t_next = min(t + dt, horizon)
        if m.pending and m.pending[0][0] > t:
            t_next = min(t_next, m.pending[0][0])
        p0, p1 = scenario.entity_at(t), scenario.entity_at(t_next)
        m.move_auvs(t, t_next)
        if m.phase == "verified" and isinstance(m.plan, ContainingPlan):
            status = trace_step(p0, p1, m.component, st.auvs)
            if status == "detected":
                m.pending.append((t_next, p1, "sensor"))
                m.pending.sort(key=lambda p: p[0])
            elif status == "escaped":
                st.log("escaped", time=t_next, position=p1, reason="crossed an unsensed wall")
                outcome = "escaped"
        elif m.phase == "shrinking":
            r = m.shrink_radius(t_next)
            outside = np.linalg.norm(p1 - m.plan.cage.origin) > r + 1e-9
            if outside and not covered_by_any(st.auvs, p1[None])[0]:
                st.log("escaped", time=t_next, position=p1, reason="left the shrinking cage")
                outcome = "escaped"
        elif st.depth_map.cell_of(p1[0], p1[1]) is None:
            st.log("escaped", time=t_next, position=p1, reason="left the map")
            outcome = "escaped"
        t = t_next
        record(t)
    return SimulationResult(
        outcome=outcome,
        events=list(st.event_log),
        times=np.array(times),
        auv_positions=np.array(auv_pos),
        entity_positions=np.array(ent_pos),
        cage_radius=np.array(radii),
    )
