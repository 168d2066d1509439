"""Command-line entry point.

Usage:
  auvcage gen-map --seed 7 --size 64x64 --cell 10 --out map.txt
  auvcage plan-contain --map map.txt --sighting "320 320 -5" --fleet 60 --out plan/
  auvcage plan-capture --n 12 --rs 0.288675 --seed 1 --out cage/
  auvcage thomson-stats --n 4,6,12 --trials 100 --out stats/
  auvcage simulate scenarios/smoke.scn --out events.csv

Exit codes: 0 success or captured, 1 I/O failure, 2 usage or validation
error, 3 unreachable plan, 4 containment impossible, 5 coverage failure,
6 contained, 7 escaped, 8 exhausted.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .assignment import write_assignment_csv
from .barrier_cover import write_cover_csv
from .bathymetry import Sighting, generate_depth_map, read_depth_map, write_depth_map
from .errors import CageError, ContainmentImpossible, CoverageError, ParameterError, ScenarioError
from .graphcut import write_cut_polyline
from .mission.planner import MissionState, PlannerOptions, plan_contain
from .mission.scenario import load_scenario, validate_scenario
from .mission.simulate import simulate, write_event_log
from .sensors import AuvPose, SensorModel
from .spherical_cage import build_spherical_cage, capture_radius_stats, cone_poses, write_cage, write_mesh, write_stats_csv

log = logging.getLogger("auvcage")

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_UNREACHABLE = 3
EXIT_CONTAINMENT = 4
EXIT_COVERAGE = 5
OUTCOME_EXIT = {"captured": 0, "contained": 6, "escaped": 7, "exhausted": 8}


@dataclass
class RunConfig:
    """Validated view of the parsed arguments."""

    command: str
    inputs: list[Path] = field(default_factory=list)
    out: Path | None = None
    seed: int | None = None
    numbers: dict = field(default_factory=dict)

    _POSITIVE = ("rs", "cell", "timestep", "horizon", "roughness")
    _NON_NEGATIVE = ("h", "ve", "vp", "elapsed")

    def validate(self) -> None:
        for path in self.inputs:
            if not path.is_file():
                raise FileNotFoundError(f"input file not found: {path}")
        for key, value in self.numbers.items():
            if value is None:
                continue
            if not math.isfinite(value):
                raise ParameterError(f"--{key} must be finite")
            if key in self._POSITIVE and value <= 0:
                raise ParameterError(f"--{key} must be > 0, got {value}")
            if key in self._NON_NEGATIVE and value < 0:
                raise ParameterError(f"--{key} must be >= 0, got {value}")
        if self.numbers.get("trials") is not None and self.numbers["trials"] < 1:
            raise ParameterError("--trials must be >= 1")
        if self.numbers.get("samples") is not None and self.numbers["samples"] < 1000:
            raise ParameterError("--samples must be >= 1000")
        if self.numbers.get("margin") is not None and not 0 <= self.numbers["margin"] < 1:
            raise ParameterError("--margin must lie in [0, 1)")


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    return w, h


def _point(text: str) -> tuple[float, float, float]:
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        vals = ()
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected 'x y z', got {text!r}")
    return vals


def _points(text: str) -> np.ndarray:
    return np.array([_point(chunk) for chunk in text.split(";") if chunk.strip()])


def _n_list(text: str) -> list[int]:
    out = []
    try:
        for part in text.split(","):
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-"))
                out.extend(range(lo, hi + 1))
            elif part.strip():
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list like 4,6,12 or 4-30, got {text!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="auvcage", description="Multi-AUV caging planner.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-map", help="generate a random depth map")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--size", type=_size, default=(64, 64), help="WxH cells")
    g.add_argument("--cell", type=float, default=10.0, help="cell size in meters")
    g.add_argument("--roughness", type=float, default=1.0)
    g.add_argument("--island-threshold", type=float, default=10.0)
    g.add_argument("--min-depth", type=float, default=1.0)
    g.add_argument("--max-depth", type=float, default=50.0)
    g.add_argument("--out", type=Path, required=True)

    c = sub.add_parser("plan-contain", help="min-cut containing cage for one sighting")
    c.add_argument("--map", type=Path, required=True)
    c.add_argument("--sighting", type=_point, required=True, help="'x y z' in meters")
    c.add_argument("--elapsed", type=float, default=0.0, help="seconds since the sighting")
    fleet = c.add_mutually_exclusive_group(required=True)
    fleet.add_argument("--starts", type=_points, help="'x y z; x y z; ...'")
    fleet.add_argument("--fleet", type=int, help="number of AUVs placed at random in free space")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--rs", type=float, default=5.0)
    c.add_argument("--h", type=float, default=0.0)
    c.add_argument("--ve", type=float, default=0.5)
    c.add_argument("--vp", type=float, default=2.0)
    c.add_argument("--margin", type=float, default=0.05)
    c.add_argument("--out", type=Path, required=True, help="output directory")

    s = sub.add_parser("plan-capture", help="spherical capturing cage")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--rs", type=float, required=True)
    s.add_argument("--h", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--center", type=_point, default=(0.0, 0.0, 0.0))
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--out", type=Path, required=True, help="output directory")

    t = sub.add_parser("thomson-stats", help="max-edge and radius statistics over relaxation trials")
    t.add_argument("--n", type=_n_list, default=[4, 5, 6, 10, 12, 20])
    t.add_argument("--trials", type=int, default=100)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--rs", type=float, default=0.5 / math.sqrt(3))
    t.add_argument("--jobs", type=int, default=1)
    t.add_argument("--out", type=Path, required=True, help="output directory")

    m = sub.add_parser("simulate", help="run a scenario file")
    m.add_argument("scenario", type=Path)
    m.add_argument("--seed", type=int)
    m.add_argument("--rs", type=float)
    m.add_argument("--h", type=float)
    m.add_argument("--ve", type=float)
    m.add_argument("--vp", type=float)
    m.add_argument("--timestep", type=float)
    m.add_argument("--horizon", type=float)
    m.add_argument("--out", type=Path, help="event log CSV")
    return p


def _config(args) -> RunConfig:
    numbers = {
        k: getattr(args, k)
        for k in ("rs", "h", "ve", "vp", "timestep", "horizon", "cell", "roughness", "elapsed", "trials", "samples", "margin")
        if hasattr(args, k)
    }
    inputs = [p for p in (getattr(args, "map", None), getattr(args, "scenario", None)) if p is not None]
    return RunConfig(args.command, inputs, getattr(args, "out", None), getattr(args, "seed", None), numbers)


def _out_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_gen_map(args) -> int:
    w, h = args.size
    m = generate_depth_map(
        args.seed, w, h, args.cell, args.roughness, args.island_threshold, args.min_depth, args.max_depth
    )
    write_depth_map(args.out, m)
    land = int(np.count_nonzero(m.depths == 0))
    print(f"wrote {args.out}: {w}x{h} cells of {args.cell} m, {land} land cells")
    return EXIT_OK


def _random_fleet(depth_map, count, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    w, h = depth_map.extent
    pts = []
    while len(pts) < count:
        p = rng.uniform([0.0, 0.0, -float(depth_map.depths.max())], [w, h, 0.0])
        if depth_map.in_free_space(p):
            pts.append(p)
    return np.array(pts)


def cmd_plan_contain(args) -> int:
    m = read_depth_map(args.map)
    sensor = SensorModel.from_height(args.rs, args.h)
    if not m.in_free_space(args.sighting):
        raise ParameterError(f"sighting {args.sighting} is not in free space")
    if args.starts is not None:
        starts = args.starts
    else:
        if args.fleet < 1:
            raise ParameterError("--fleet must be >= 1")
        starts = _random_fleet(m, args.fleet, args.seed)
    down = (0.0, 0.0, -1.0)
    state = MissionState(
        clock=args.elapsed,
        auvs=[AuvPose(p, down, sensor) for p in starts],
        depth_map=m,
        v_e=args.ve,
        v_p=args.vp,
        sensor=sensor,
        options=PlannerOptions(seed=args.seed, safety_margin=args.margin),
    )
    plan, failure = plan_contain(state, Sighting(args.sighting, 0.0))
    if plan is None:
        print(
            f"unreachable: {failure.reason}; bottleneck {failure.bottleneck:.6g} s, "
            f"deadline {failure.deadline:.6g} s, slots {failure.slots}, agents {len(starts)}"
        )
        return EXIT_UNREACHABLE
    out = _out_dir(args.out)
    write_cut_polyline(out / "cut.csv", plan.cut, m)
    write_cover_csv(out / "discs.csv", plan.cover)
    write_assignment_csv(out / "assignment.csv", plan.assignment)
    print(
        f"cut edges {len(plan.cut.cut_edges)}, wall segments {len(plan.segments)}, "
        f"cost {plan.cut.total_cost:.6g}, discs {len(plan.slots)}, "
        f"bottleneck {plan.assignment.bottleneck:.6g} s <= deadline {plan.deadline:.6g} s"
    )
    return EXIT_OK


def cmd_plan_capture(args) -> int:
    if args.n < 4:
        raise ParameterError(f"a closed spherical cage needs --n >= 4, got {args.n}")
    cage = build_spherical_cage(args.n, args.rs, seed=args.seed, center=args.center, n_verify=args.samples)
    poses = cone_poses(cage, args.h)
    out = _out_dir(args.out)
    write_cage(out / "cage.txt", cage, poses)
    write_mesh(out / "cage.obj", cage)
    print(
        f"N={cage.n} edges={len(cage.edges)} radius={cage.radius:.6g} m "
        f"max_edge={cage.max_edge:.6g} m shrink={cage.shrink_factor:.6g} verified"
    )
    return EXIT_OK


def cmd_thomson_stats(args) -> int:
    if not args.n or min(args.n) < 4:
        raise ParameterError("--n values must be >= 4")
    out = _out_dir(args.out)
    stats = [capture_radius_stats(n, args.rs, args.trials, seed=args.seed, n_jobs=args.jobs) for n in args.n]
    cols = ["N", "trials", "l_max_mean", "l_max_std", "l_max_min", "l_max_max", "radius_mean", "radius_std",
            "verified_radius_mean"]
    lines = [",".join(cols)]
    for st in stats:
        s = st.summary()
        lines.append(",".join(str(s[c]) if c in ("N", "trials") else repr(s[c]) for c in cols))
        print(f"N={s['N']:3d} l_max {s['l_max_mean']:.4f} +- {s['l_max_std']:.4f}  radius {s['radius_mean']:.4f}")
    (out / "table.csv").write_text("\n".join(lines) + "\n")
    write_stats_csv(out / "radius.csv", stats)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    for flag, name in (("ve", "v_e"), ("vp", "v_p"), ("timestep", "timestep"), ("horizon", "horizon")):
        if getattr(args, flag) is not None:
            changes[name] = getattr(args, flag)
    if args.rs is not None or args.h is not None:
        rs = sc.sensor.r_s if args.rs is None else args.rs
        h = sc.sensor.h if args.h is None else args.h
        changes["sensor"] = SensorModel.from_height(rs, h)
    if changes:
        sc = dataclasses.replace(sc, **changes)
        validate_scenario(sc)
    result = simulate(sc)
    if args.out is not None:
        write_event_log(args.out, result.events)
    for ev in result.events:
        log.info("%10.3f %s %s", ev.time, ev.kind, ev.payload)
    print(f"outcome {result.outcome} at t={result.times[-1]:.6g} s after {len(result.events)} events")
    return OUTCOME_EXIT[result.outcome]


COMMANDS = {
    "gen-map": cmd_gen_map,
    "plan-contain": cmd_plan_contain,
    "plan-capture": cmd_plan_capture,
    "thomson-stats": cmd_thomson_stats,
    "simulate": cmd_simulate,
}


def _setup_logging() -> None:
    level = os.environ.get("CAGE_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        _config(args).validate()
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ContainmentImpossible as exc:
        print(f"containment impossible: {exc}", file=sys.stderr)
        return EXIT_CONTAINMENT
    except CoverageError as exc:
        print(f"coverage failure: {exc}", file=sys.stderr)
        return EXIT_COVERAGE
    except (ParameterError, CageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
