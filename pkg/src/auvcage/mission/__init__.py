"""Sighting-driven cage-and-capture mission loop and simulator."""

from .partition import CageComponent, cage_component, cage_partitions_check, trace_step
from .planner import (
    EVENT_KINDS,
    CapturingPlan,
    ContainingPlan,
    Decision,
    Event,
    MissionState,
    PlannerOptions,
    ShrinkPlan,
    on_sighting,
    plan_capture,
    plan_contain,
    shrink_trajectories,
)
from .scenario import Scenario, load_scenario, parse_scenario
from .simulate import OUTCOMES, SimulationResult, read_event_log, simulate, write_event_log

__all__ = [
    "CageComponent",
    "cage_component",
    "cage_partitions_check",
    "trace_step",
    "EVENT_KINDS",
    "CapturingPlan",
    "ContainingPlan",
    "Decision",
    "Event",
    "MissionState",
    "PlannerOptions",
    "ShrinkPlan",
    "on_sighting",
    "plan_capture",
    "plan_contain",
    "shrink_trajectories",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "OUTCOMES",
    "SimulationResult",
    "read_event_log",
    "simulate",
    "write_event_log",
]
