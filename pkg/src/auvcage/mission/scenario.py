"""Scenario files: sectioned ``key = value`` text with line-numbered diagnostics.

Example::

    [map]
    seed = 3
    size = 24x24
    cell = 20

    [fleet]
    vp = 2.0
    rs = 10
    starts = 100 100 -30; 140 100 -30

    [entity]
    ve = 0.2
    trajectory = 0 240 240 -30
    sightings = 0

    [sim]
    timestep = 1.0
    horizon = 400
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..bathymetry import DepthMap, generate_depth_map, read_depth_map
from ..errors import ParameterError, ScenarioError
from ..sensors import SensorModel

__all__ = ["Scenario", "parse_scenario", "load_scenario", "validate_scenario"]

_SECTIONS = {
    "map": {"file", "seed", "size", "cell", "roughness", "island_threshold", "min_depth", "max_depth"},
    "fleet": {"count", "vp", "sensor", "rs", "h", "starts", "start_cluster"},
    "entity": {"ve", "trajectory", "sightings"},
    "sim": {"timestep", "horizon", "seed", "safety_margin", "shrink_speed", "n_verify"},
}


@dataclass(frozen=True, eq=False)
class Scenario:
    depth_map: DepthMap
    starts: np.ndarray  # (count, 3)
    v_p: float
    sensor: SensorModel
    v_e: float
    waypoints: np.ndarray  # (k, 4) rows of t, x, y, z
    sightings: tuple[float, ...]
    timestep: float = 1.0
    horizon: float = 600.0
    seed: int = 0
    safety_margin: float = 0.05
    shrink_speed: float | None = None
    n_verify: int = 4000
    source: str = field(default="<memory>", compare=False)

    def __post_init__(self):
        if self.timestep <= 0 or self.horizon <= 0:
            raise ParameterError("timestep and horizon must be > 0")
        if self.v_p < 0 or self.v_e < 0:
            raise ParameterError("speeds must be >= 0")

    @property
    def count(self) -> int:
        return len(self.starts)

    def entity_at(self, t: float) -> np.ndarray:
        """Scripted entity position, held constant outside the waypoint span."""
        wp = self.waypoints
        return np.array([np.interp(t, wp[:, 0], wp[:, k]) for k in (1, 2, 3)])


def _floats(text, line, n=None, what="value"):
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ScenarioError(f"malformed {what}: {text!r}", line) from None
    if n is not None and len(vals) != n:
        raise ScenarioError(f"{what} needs {n} numbers, got {len(vals)}", line)
    if not all(math.isfinite(v) for v in vals):
        raise ScenarioError(f"{what} must be finite", line)
    return vals


def _rows(text, line, n, what):
    return [_floats(chunk, line, n, what) for chunk in text.split(";") if chunk.strip()]


def _tokenize(text: str):
    """Yield ``{section: {key: (value, line)}}`` from the raw text."""
    data: dict[str, dict[str, tuple[str, int]]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"unterminated section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ScenarioError(f"unknown section [{section}]", lineno)
            if section in data:
                raise ScenarioError(f"duplicate section [{section}]", lineno)
            data[section] = {}
            continue
        if section is None:
            raise ScenarioError("key outside of any section", lineno)
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _SECTIONS[section]:
            raise ScenarioError(f"unknown key {key!r} in [{section}]", lineno)
        if key in data[section]:
            raise ScenarioError(f"duplicate key {key!r}", lineno)
        data[section][key] = (value, lineno)
    return data


def parse_scenario(text: str, base_dir=".", source: str = "<memory>") -> Scenario:
    """Parse and validate a scenario; every error carries its line number."""
    data = _tokenize(text)
    last_line = max(1, len(text.splitlines()))
    for sec in ("map", "fleet", "entity"):
        if sec not in data:
            raise ScenarioError(f"missing section [{sec}]", last_line)

    def get(sec, key, default=None, conv=float):
        entry = data.get(sec, {}).get(key)
        if entry is None:
            if default is ...:
                raise ScenarioError(f"missing key {key!r} in [{sec}]", last_line)
            return default
        value, line = entry
        try:
            return conv(value)
        except (ValueError, TypeError):
            raise ScenarioError(f"bad value for {key!r}: {value!r}", line) from None

    def line_of(sec, key):
        return data.get(sec, {}).get(key, ("", last_line))[1]

    # map
    try:
        if "file" in data["map"]:
            path = Path(base_dir) / data["map"]["file"][0]
            try:
                depth_map = read_depth_map(path)
            except OSError as exc:
                raise ScenarioError(f"cannot read map: {exc}", line_of("map", "file")) from None
        else:
            size = get("map", "size", ..., str).lower().split("x")
            if len(size) != 2:
                raise ScenarioError("size must look like WxH", line_of("map", "size"))
            try:
                width, height = int(size[0]), int(size[1])
            except ValueError:
                raise ScenarioError("size must look like WxH", line_of("map", "size")) from None
            depth_map = generate_depth_map(
                get("map", "seed", ..., int),
                width,
                height,
                get("map", "cell", ...),
                roughness=get("map", "roughness", 1.0),
                island_threshold=get("map", "island_threshold", 10.0),
                min_depth=get("map", "min_depth", 1.0),
                max_depth=get("map", "max_depth", 50.0),
            )
    except ParameterError as exc:
        raise ScenarioError(str(exc), line_of("map", "size")) from None

    # fleet
    v_p = get("fleet", "vp", ...)
    r_s = get("fleet", "rs", ...)
    h = get("fleet", "h", 0.0)
    kind = get("fleet", "sensor", "cone" if h > 0 else "sphere", str)
    try:
        sensor = SensorModel(kind, r_s, h)
    except ParameterError as exc:
        raise ScenarioError(str(exc), line_of("fleet", "rs")) from None
    if v_p < 0:
        raise ScenarioError("vp must be >= 0", line_of("fleet", "vp"))
    if "starts" in data["fleet"]:
        value, line = data["fleet"]["starts"]
        starts = np.array(_rows(value, line, 3, "start position"))
    elif "start_cluster" in data["fleet"]:
        value, line = data["fleet"]["start_cluster"]
        x, y, z, spread = _floats(value, line, 4, "start_cluster (x y z spread)")
        n = get("fleet", "count", ..., int)
        rng = np.random.default_rng(get("sim", "seed", 0, int))
        starts = np.array([x, y, z]) + rng.uniform(-spread, spread, size=(n, 3))
    else:
        raise ScenarioError("fleet needs 'starts' or 'start_cluster'", last_line)
    count = get("fleet", "count", len(starts), int)
    if count != len(starts):
        raise ScenarioError(f"count {count} does not match {len(starts)} start positions", line_of("fleet", "count"))
    if count < 1:
        raise ScenarioError("fleet must have at least one AUV", line_of("fleet", "count"))
    for k, p in enumerate(starts):
        if not depth_map.in_free_space(p):
            raise ScenarioError(f"start position {k} {tuple(p)} is not in free space", line_of("fleet", "starts"))

    # entity
    v_e = get("entity", "ve", ...)
    if v_e < 0:
        raise ScenarioError("ve must be >= 0", line_of("entity", "ve"))
    value, tline = data["entity"].get("trajectory", (None, last_line))
    if value is None:
        raise ScenarioError("missing key 'trajectory' in [entity]", last_line)
    waypoints = np.array(_rows(value, tline, 4, "waypoint (t x y z)"))
    if len(waypoints) == 0:
        raise ScenarioError("trajectory needs at least one waypoint", tline)
    if np.any(np.diff(waypoints[:, 0]) <= 0):
        raise ScenarioError("waypoint times must be strictly increasing", tline)
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        speed = np.linalg.norm(b[1:] - a[1:]) / (b[0] - a[0])
        if speed > v_e * (1 + 1e-9) + 1e-12:
            raise ScenarioError(f"trajectory speed {speed:.6g} exceeds ve={v_e} after t={a[0]}", tline)
    for wp in waypoints:
        if not depth_map.in_free_space(wp[1:]):
            raise ScenarioError(f"waypoint at t={wp[0]} is not in free space", tline)

    def at(t):
        return np.array([np.interp(t, waypoints[:, 0], waypoints[:, k]) for k in (1, 2, 3)])

    value, sline = data["entity"].get("sightings", (None, last_line))
    if value is None:
        raise ScenarioError("missing key 'sightings' in [entity]", last_line)
    sightings = []
    for chunk in value.split(";"):
        vals = _floats(chunk, sline, what="sighting")
        if len(vals) == 1:
            sightings.append(vals[0])
        elif len(vals) == 4:
            if np.linalg.norm(at(vals[0]) - vals[1:]) > 1e-6:
                raise ScenarioError(f"sighting at t={vals[0]} is off the entity trajectory", sline)
            sightings.append(vals[0])
        elif vals:
            raise ScenarioError("sighting must be 't' or 't x y z'", sline)
    if not sightings:
        raise ScenarioError("at least one sighting is required", sline)
    if np.any(np.diff(sightings) <= 0):
        raise ScenarioError("sighting times must be strictly increasing", sline)
    if sightings[0] < 0:
        raise ScenarioError("sighting times must be >= 0", sline)

    shrink = get("sim", "shrink_speed", None)
    try:
        return Scenario(
            depth_map=depth_map,
            starts=starts,
            v_p=v_p,
            sensor=sensor,
            v_e=v_e,
            waypoints=waypoints,
            sightings=tuple(sightings),
            timestep=get("sim", "timestep", 1.0),
            horizon=get("sim", "horizon", 600.0),
            seed=get("sim", "seed", 0, int),
            safety_margin=get("sim", "safety_margin", 0.05),
            shrink_speed=shrink,
            n_verify=get("sim", "n_verify", 4000, int),
            source=source,
        )
    except ParameterError as exc:
        raise ScenarioError(str(exc), line_of("sim", "timestep")) from None


def validate_scenario(sc: Scenario) -> None:
    """Re-check cross-field constraints, e.g. after command-line overrides."""
    wp = sc.waypoints
    for a, b in zip(wp[:-1], wp[1:]):
        speed = np.linalg.norm(b[1:] - a[1:]) / (b[0] - a[0])
        if speed > sc.v_e * (1 + 1e-9) + 1e-12:
            raise ParameterError(f"trajectory speed {speed:.6g} exceeds ve={sc.v_e} after t={a[0]}")
    for k, p in enumerate(sc.starts):
        if not sc.depth_map.in_free_space(p):
            raise ParameterError(f"start position {k} is not in free space")


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), base_dir=path.parent, source=str(path))
