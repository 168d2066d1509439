import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auvcage.assignment import Assignment
from auvcage.bathymetry import DepthMap, Sighting
from auvcage.errors import ParameterError, TemporalOrderError
from auvcage.mission.planner import (
    EVENT_KINDS,
    MissionState,
    PlannerOptions,
    _unit_cage,
    on_sighting,
    plan_capture,
    shrink_trajectories,
    sphere_fits,
)
from auvcage.sensors import AuvPose, SensorModel
from auvcage.spherical_cage import build_spherical_cage, cone_poses, verify_coverage

DOWN = (0.0, 0.0, -1.0)


def deep_map(n=30, cs=10.0, depth=200.0):
    return DepthMap(n, n, cs, np.full((n, n), depth))


def lagoon_map():
    """Open water; a two-cell-thick land ring around a lagoon, pierced by a channel in row 5."""
    d = np.full((14, 14), 3.0)
    d[2:10, 2:10] = 0.0
    d[4:8, 4:8] = 3.0
    d[5, 8:10] = 3.0
    return DepthMap(14, 14, 2.0, d)


def state_for(m, positions, sensor, v_e, v_p, **opts):
    auvs = [AuvPose(p, DOWN, sensor) for p in positions]
    return MissionState(0.0, auvs, m, v_e, v_p, sensor, PlannerOptions(**opts))


def test_fleet_in_formation_goes_capture_with_zero_bottleneck():
    m = deep_map()
    sensor = SensorModel.from_height(10.0)
    center = np.array([150.0, 150.0, -100.0])
    cage = _unit_cage(12, 10.0, 0, 4000, ()).centered_at(center)
    poses = cone_poses(cage, 0.0, sensor)
    # an immobile fleet can only use the formation it already holds
    state = MissionState(0.0, poses, m, 0.5, 0.0, sensor, PlannerOptions())
    decision = on_sighting(state, Sighting(tuple(center), 0.0))
    assert decision.action == "go_capture"
    assert decision.plan.assignment.bottleneck == 0.0
    assert decision.plan.cage.n == 12
    assert decision.plan.cage.radius == pytest.approx(cage.radius)


def test_three_agents_contain_a_narrow_lagoon():
    m = lagoon_map()
    sensor = SensorModel.from_height(3.0)
    starts = [(24.0, 11.0, -1.0), (25.0, 12.0, -1.0), (26.0, 11.0, -1.0)]
    state = state_for(m, starts, sensor, 0.1, 1.0)
    decision = on_sighting(state, Sighting((11.0, 11.0, -1.5), 0.0))
    assert decision.action == "go_contain"
    plan = decision.plan
    assert len(plan.slots) <= 3
    assert plan.cut.total_cost == pytest.approx(6.0)
    assert [e.kind for e in state.event_log] == ["sighting", "plan_contain"]


def test_distant_fleet_with_no_time_waits():
    m = deep_map(n=10, depth=50.0)
    sensor = SensorModel.from_height(5.0)
    starts = [(5.0, 5.0, -10.0)] * 6
    state = state_for(m, starts, sensor, 1e6, 0.5)
    decision = on_sighting(state, Sighting((50.0, 50.0, -20.0), 0.0))
    assert decision.action == "wait"
    assert decision.plan is None
    assert state.event_log[-1].kind == "wait"


def test_sighting_before_clock_is_rejected():
    m = deep_map(n=10, depth=50.0)
    sensor = SensorModel.from_height(5.0)
    state = state_for(m, [(5.0, 5.0, -10.0)], sensor, 0.5, 1.0)
    state.clock = 10.0
    with pytest.raises(TemporalOrderError):
        on_sighting(state, Sighting((50.0, 50.0, -20.0), 5.0))


def test_sighting_outside_free_space_is_rejected():
    m = deep_map(n=10, depth=50.0)
    sensor = SensorModel.from_height(5.0)
    state = state_for(m, [(5.0, 5.0, -10.0)], sensor, 0.5, 1.0)
    with pytest.raises(ParameterError):
        on_sighting(state, Sighting((50.0, 50.0, -80.0), 0.0))


def test_capture_needs_four_agents():
    m = deep_map()
    sensor = SensorModel.from_height(10.0)
    state = state_for(m, [(150.0, 150.0, -100.0)] * 3, sensor, 0.0, 1.0)
    assert plan_capture(state, Sighting((150.0, 150.0, -100.0), 0.0)) is None


def test_capture_radius_respects_free_space():
    m = deep_map(depth=40.0)
    sensor = SensorModel.from_height(10.0)
    center = (150.0, 150.0, -20.0)
    state = state_for(m, [center] * 8, sensor, 0.0, 5.0)
    plan = plan_capture(state, Sighting(center, 0.0))
    assert plan is not None
    assert plan.cage.radius <= 20.0 + 1e-9
    assert sphere_fits(m, center, plan.cage.radius)


def test_event_log_rejects_time_travel():
    m = deep_map(n=10, depth=50.0)
    state = state_for(m, [], SensorModel(), 0.5, 1.0)
    state.log("wait", time=5.0)
    with pytest.raises(TemporalOrderError):
        state.log("wait", time=4.0)
    with pytest.raises(ParameterError):
        state.log("contained", time=6.0)
    assert "contained" not in EVENT_KINDS


def test_repeated_sightings_keep_log_ordered():
    m = lagoon_map()
    sensor = SensorModel.from_height(3.0)
    starts = [(24.0, 11.0, -1.0), (25.0, 12.0, -1.0), (26.0, 11.0, -1.0)]
    state = state_for(m, starts, sensor, 0.1, 1.0)
    for t in (0.0, 1.0, 1.0, 3.5):
        on_sighting(state, Sighting((11.0, 11.0, -1.5), t))
    times = [e.time for e in state.event_log]
    assert times == sorted(times)
    # the same lagoon cannot be beaten, so later sightings wait
    assert [e.kind for e in state.event_log].count("plan_contain") == 1


# shrink trajectories


@pytest.fixture(scope="module")
def cage12():
    # choose r_s so the verified cage radius is exactly 10
    unit = build_spherical_cage(12, 1.0, seed=0)
    return build_spherical_cage(12, 10.0 / unit.radius, seed=0).scaled(10.0)


def identity(n):
    return Assignment(tuple(range(n)), 0.0)


def test_shrink_ten_to_one_takes_nine_seconds(cage12):
    plan = shrink_trajectories(cage12, identity(12), 1.0, 1.0, 1.0)
    assert plan.duration == pytest.approx(9.0)
    assert plan.radii[0] == pytest.approx(10.0)
    assert plan.radii[-1] == pytest.approx(1.0)
    assert all(len(w) == 9 for w in plan.waypoints().values())


def test_shrink_intermediate_cages_stay_covered(cage12):
    plan = shrink_trajectories(cage12, identity(12), 1.0, 1.0, 1.0)
    assert cage12.radius == pytest.approx(10.0)
    for r in plan.radii:
        ok, worst = verify_coverage(cage12.scaled(r), n_samples=2000, seed=1)
        assert ok, (r, worst)


def test_zero_shrink_is_empty(cage12):
    plan = shrink_trajectories(cage12, identity(12), 1.0, cage12.radius, 1.0)
    assert plan.duration == 0.0
    assert all(w == [] for w in plan.waypoints().values())


def test_capture_radius_above_cage_radius_raises(cage12):
    with pytest.raises(ParameterError):
        shrink_trajectories(cage12, identity(12), 1.0, cage12.radius + 1.0, 1.0)


def test_shrink_speed_caps_speed(cage12):
    plan = shrink_trajectories(cage12, identity(12), 2.0, 1.0, 1.0, shrink_speed=0.5)
    assert plan.duration == pytest.approx(18.0)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(1.0, 50.0),
    st.floats(0.0, 0.99),
    st.floats(0.1, 5.0),
    st.floats(0.1, 3.0),
    st.floats(0.0, 3.0),
)
def test_shrink_pairwise_distances_never_grow(radius, frac, v_p, dt, h):
    cage = build_spherical_cage(6, 1.0, seed=0).scaled(radius)
    plan = shrink_trajectories(cage, identity(6), v_p, radius * frac, dt, h=h)
    pos = plan.positions
    for i, j in itertools.combinations(range(6), 2):
        d = np.linalg.norm(pos[:, i] - pos[:, j], axis=-1)
        assert np.all(np.diff(d) <= 1e-9)
    step = np.linalg.norm(np.diff(pos, axis=0), axis=-1)
    gaps = np.diff(plan.times)
    assert np.all(step <= v_p * gaps[:, None] + 1e-9)
    assert np.all(np.diff(plan.radii) <= 1e-12)
