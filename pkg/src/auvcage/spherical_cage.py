"""Shrinkable spherical cages from relaxed point charges on the unit sphere.

Pipeline: random charges on the unit sphere are relaxed under Coulomb
repulsion, neighbours are taken from the spherical Delaunay triangulation
(the convex hull of the points), and the formation is scaled so its longest
neighbour edge equals ``sqrt(3) * r_s``.

Scaling alone bounds the gap inside each flat hull triangle; the cage
sphere itself bulges outward above every face, so the pipeline measures the
true worst gap on the sphere and shrinks the formation once if needed.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import CoverageError, GeometryError, NumericError, ParameterError
from .sensors import AuvPose, SensorModel

__all__ = [
    "SphereConfig",
    "SphericalCage",
    "RadiusStats",
    "init_sphere_points",
    "coulomb_energy",
    "relax_charges",
    "hull_faces",
    "spherical_delaunay",
    "scale_to_cage",
    "sphere_gap",
    "verify_coverage",
    "build_spherical_cage",
    "relaxed_config",
    "cone_poses",
    "capture_radius_stats",
    "write_cage",
    "read_cage",
    "write_mesh",
    "write_stats_csv",
]

log = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class SphereConfig:
    points: np.ndarray
    seed: int | None = None
    iterations: int = 0
    residual: float = math.nan
    energies: list[float] | None = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 3)
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ParameterError("sphere configuration points must have unit norm")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True, eq=False)
class SphericalCage:
    """Disc centers on a sphere of ``radius`` around ``origin``."""

    centers: np.ndarray
    radius: float
    r_s: float
    max_edge: float
    edges: list[tuple[int, int]]
    faces: np.ndarray
    unit_points: np.ndarray
    origin: np.ndarray
    unit_max_edge: float
    shrink_factor: float = 1.0

    @property
    def n(self) -> int:
        return len(self.centers)

    def scaled(self, radius: float) -> "SphericalCage":
        """Same shape at another radius (pure scaling about the origin)."""
        k = radius / self.radius
        return replace(
            self,
            centers=self.origin + radius * self.unit_points,
            radius=float(radius),
            max_edge=self.max_edge * k,
            shrink_factor=self.shrink_factor * k,
        )

    def centered_at(self, origin) -> "SphericalCage":
        origin = np.asarray(origin, dtype=float).reshape(3)
        return replace(self, origin=origin, centers=origin + self.radius * self.unit_points)


def init_sphere_points(n: int, seed: int) -> SphereConfig:
    """``n`` points uniform on the unit sphere (normalized Gaussian draws)."""
    if n < 2:
        raise ParameterError(f"need at least 2 points, got {n}")
    rng = np.random.default_rng(seed)
    while True:
        pts = rng.standard_normal((n, 3))
        norms = np.linalg.norm(pts, axis=1)
        if norms.min() > 1e-12:
            pts /= norms[:, None]
            if _min_pair_distance(pts)[0] > 1e-9:
                return SphereConfig(_renormalize(pts), seed=seed)


def _renormalize(pts):
    return pts / np.sqrt(np.einsum("ij,ij->i", pts, pts))[:, None]


def _min_pair_distance(pts):
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    np.fill_diagonal(d, np.inf)
    k = int(np.argmin(d))
    return float(d.flat[k]), divmod(k, len(pts))


def coulomb_energy(points) -> float:
    """Total potential ``sum_{i<j} 1 / |p_i - p_j|``."""
    pts = np.asarray(points, dtype=float)
    iu = np.triu_indices(len(pts), 1)
    return float((1.0 / np.linalg.norm(pts[iu[0]] - pts[iu[1]], axis=1)).sum())


def _energy_and_force(x):
    diff = x[:, None, :] - x[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, 1.0)
    if d2.min() < 1e-18:
        i, j = np.unravel_index(int(np.argmin(d2)), d2.shape)
        raise NumericError(f"charges {i} and {j} collided", pair=(int(i), int(j)))
    inv = 1.0 / np.sqrt(d2)
    np.fill_diagonal(inv, 0.0)
    energy = inv.sum() / 2
    force = np.einsum("ij,ijk->ik", inv**3, diff)
    # keep only the component tangent to the sphere
    force -= np.einsum("ij,ij->i", force, x)[:, None] * x
    return energy, force


def relax_charges(
    config: SphereConfig,
    dt: float = 0.05,
    damping: float = 0.9,
    tol: float = 1e-6,
    max_iters: int = 100_000,
    max_dt: float | None = None,
    record_energy: bool = False,
) -> SphereConfig:
    """Damped Coulomb relaxation on the unit sphere.

    Explicit Euler steps in the tangent plane followed by re-projection onto
    the sphere. A step that would raise the potential is rejected, the step
    size halved and velocities zeroed; accepted steps let the step grow by
    10% up to ``max_dt`` (default ``10 * dt``). Stops once the largest
    tangential force drops below ``tol``.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    if not 0 < damping <= 1:
        raise ParameterError(f"damping must lie in (0, 1], got {damping}")
    if not tol > 0:
        raise ParameterError(f"tol must be > 0, got {tol}")
    max_dt = 10 * dt if max_dt is None else max_dt
    x = config.points.copy()
    v = np.zeros_like(x)
    energy, force = _energy_and_force(x)
    trace = [energy] if record_energy else None
    step = dt
    residual = math.sqrt(np.einsum("ij,ij->i", force, force).max())
    it = 0
    while it < max_iters and residual >= tol:
        it += 1
        v_new = damping * v + step * force
        x_new = _renormalize(x + step * v_new)
        e_new, f_new = _energy_and_force(x_new)
        if e_new > energy:
            step *= 0.5
            v[:] = 0.0
            if step < 1e-16:
                break
            continue
        x, energy, force = x_new, e_new, f_new
        v = v_new - np.einsum("ij,ij->i", v_new, x)[:, None] * x
        step = min(step * 1.1, max_dt)
        residual = math.sqrt(np.einsum("ij,ij->i", force, force).max())
        if trace is not None:
            trace.append(energy)
    dmin, pair = _min_pair_distance(x)
    if dmin < 1e-9:
        raise NumericError(f"charges {pair} collided", pair=pair)
    return SphereConfig(x, seed=config.seed, iterations=it, residual=residual, energies=trace)


def hull_faces(points) -> np.ndarray:
    """Outward-oriented triangles of the convex hull, (F, 3) vertex indices."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 4:
        raise GeometryError(f"a closed hull needs at least 4 points, got {len(pts)}")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise GeometryError(f"degenerate hull: {str(exc).splitlines()[0]}") from None
    if len(hull.vertices) != len(pts):
        raise GeometryError("some points are not hull vertices")
    faces = hull.simplices.copy()
    a, b, c = pts[faces[:, 0]], pts[faces[:, 1]], pts[faces[:, 2]]
    flip = np.einsum("ij,ij->i", np.cross(b - a, c - a), hull.equations[:, :3]) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return faces


def _faces_to_edges(faces) -> list[tuple[int, int]]:
    edges = set()
    for f in faces.tolist():
        for i, j in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            edges.add((min(i, j), max(i, j)))
    return sorted(edges)


def spherical_delaunay(config: SphereConfig) -> list[tuple[int, int]]:
    """Neighbour edges of the spherical Delaunay triangulation (hull edges)."""
    faces = hull_faces(config.points)
    edges = _faces_to_edges(faces)
    n = config.n
    if n - len(edges) + len(faces) != 2:
        raise GeometryError(f"Euler check failed: V={n} E={len(edges)} F={len(faces)}")
    degree = np.bincount(np.array(edges).ravel(), minlength=n)
    if degree.min() < 3:
        raise GeometryError("hull vertex with degree < 3")
    return edges


def _max_edge(points, edges) -> float:
    e = np.asarray(edges)
    return float(np.linalg.norm(points[e[:, 0]] - points[e[:, 1]], axis=1).max())


def scale_to_cage(config: SphereConfig, edges, r_s: float, center=(0.0, 0.0, 0.0)) -> SphericalCage:
    """Scale so the longest neighbour edge equals ``sqrt(3) * r_s``."""
    if not r_s > 0:
        raise ParameterError(f"r_s must be > 0, got {r_s}")
    unit = config.points
    l_max = _max_edge(unit, edges)
    if not l_max > 0:
        raise ParameterError("longest edge must be positive")
    radius = SQRT3 * r_s / l_max
    origin = np.asarray(center, dtype=float).reshape(3)
    centers = origin + radius * unit
    return SphericalCage(
        centers=centers,
        radius=radius,
        r_s=float(r_s),
        max_edge=_max_edge(centers, edges),
        edges=list(edges),
        faces=hull_faces(unit),
        unit_points=unit,
        origin=origin,
        unit_max_edge=l_max,
    )


def sphere_gap(cage: SphericalCage) -> float:
    """Exact worst distance from the cage sphere to the nearest disc center.

    The maximum is attained at a spherical Voronoi vertex, i.e. the point of
    the sphere straight above a hull face's circumcenter.
    """
    unit = cage.unit_points
    faces = cage.faces
    a, b, c = unit[faces[:, 0]], unit[faces[:, 1]], unit[faces[:, 2]]
    normal = np.cross(b - a, c - a)
    normal /= np.linalg.norm(normal, axis=1)[:, None]
    gaps = np.linalg.norm(normal - a, axis=1)
    return float(gaps.max() * cage.radius)


def verify_coverage(cage: SphericalCage, n_samples: int = 10_000, seed: int = 0) -> tuple[bool, float]:
    """Sample the cage sphere; succeed iff every sample is within ``r_s`` of a center."""
    if n_samples < 1000:
        raise ParameterError(f"need at least 1000 samples, got {n_samples}")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_samples, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    pts = cage.origin + cage.radius * dirs
    worst = 0.0
    for chunk in np.array_split(pts, max(1, n_samples // 2000)):
        d = np.linalg.norm(chunk[:, None, :] - cage.centers[None, :, :], axis=-1)
        worst = max(worst, float(d.min(axis=1).max()))
    return worst <= cage.r_s, worst


def relaxed_config(n: int, seed: int, **relax_kw) -> SphereConfig:
    """Relaxed configuration whose hull triangulation is well defined."""
    config = relax_charges(init_sphere_points(n, seed), **relax_kw)
    if n < 4:
        return config
    rng = np.random.default_rng(seed)
    for _ in range(5):
        try:
            spherical_delaunay(config)
            return config
        except GeometryError:
            log.info("degenerate hull for N=%d seed=%s, jittering", n, seed)
            pts = _renormalize(config.points + 1e-8 * rng.standard_normal(config.points.shape))
            kw = dict(relax_kw, max_iters=100)
            config = relax_charges(SphereConfig(pts, seed=seed), **kw)
    spherical_delaunay(config)
    return config


def build_spherical_cage(
    n: int,
    r_s: float,
    seed: int = 0,
    center=(0.0, 0.0, 0.0),
    n_verify: int = 10_000,
    verify_seed: int | None = None,
    **relax_kw,
) -> SphericalCage:
    """Relax, triangulate, scale and verify a capturing cage.

    When sampled or exact sphere coverage fails, the formation is shrunk once
    by the gap ratio and re-verified; a second failure raises CoverageError.
    """
    if n < 4:
        raise ParameterError(f"a closed spherical cage needs at least 4 agents, got {n}")
    config = relaxed_config(n, seed, **relax_kw)
    cage = scale_to_cage(config, spherical_delaunay(config), r_s, center)
    vseed = seed if verify_seed is None else verify_seed
    ok, sampled = verify_coverage(cage, n_verify, vseed)
    gap = max(sampled, sphere_gap(cage))
    if ok and gap <= r_s:
        return cage
    cage = cage.scaled(cage.radius * (r_s / gap) * (1 - 1e-9))
    ok, sampled = verify_coverage(cage, n_verify, vseed)
    if not ok or sphere_gap(cage) > r_s:
        raise CoverageError(f"cage of {n} discs still has a gap of {sampled:.6g} m > r_s={r_s}")
    return cage


def cone_poses(cage: SphericalCage, h: float, sensor: SensorModel | None = None) -> list[AuvPose]:
    """AUV poses a distance ``h`` radially outside each disc, looking inward."""
    if not h >= 0:
        raise ParameterError(f"h must be >= 0, got {h}")
    sensor = sensor or SensorModel.from_height(cage.r_s, h)
    out = cage.unit_points
    return [
        AuvPose(c + h * u, -u, sensor) for c, u in zip(cage.centers, out)
    ]


@dataclass(frozen=True, eq=False)
class RadiusStats:
    n: int
    r_s: float
    seeds: list[int]
    l_max: np.ndarray
    radius: np.ndarray
    verified_radius: np.ndarray

    def summary(self) -> dict:
        out = {"N": self.n, "trials": len(self.seeds)}
        for name in ("l_max", "radius", "verified_radius"):
            arr = getattr(self, name)
            out.update(
                {
                    f"{name}_mean": float(arr.mean()),
                    f"{name}_std": float(arr.std()),
                    f"{name}_min": float(arr.min()),
                    f"{name}_max": float(arr.max()),
                }
            )
        return out


def _trial(args):
    n, r_s, seed, relax_kw = args
    config = relaxed_config(n, seed, **relax_kw)
    cage = scale_to_cage(config, spherical_delaunay(config), r_s)
    gap = sphere_gap(cage)
    return cage.unit_max_edge, cage.radius, cage.radius * min(1.0, r_s / gap)


def trial_seeds(seed: int, trials: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def capture_radius_stats(
    n: int, r_s: float, trials: int, seed: int = 0, n_jobs: int = 1, **relax_kw
) -> RadiusStats:
    """Repeat relax -> triangulate -> scale over independent sub-seeds.

    ``radius`` is the scaled formation radius ``sqrt(3) r_s / l_max``;
    ``verified_radius`` additionally applies the sphere-gap shrink.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if n < 4:
        raise ParameterError(f"need N >= 4 for a closed cage, got {n}")
    seeds = trial_seeds(seed, trials)
    jobs = [(n, r_s, s, relax_kw) for s in seeds]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_trial, jobs))
    else:
        rows = [_trial(j) for j in jobs]
    arr = np.array(rows, dtype=float)
    return RadiusStats(n, float(r_s), seeds, arr[:, 0], arr[:, 1], arr[:, 2])


def write_cage(path, cage: SphericalCage, poses=None) -> None:
    """Plain-text cage description; ``read_cage`` parses it back."""
    lines = [
        "SPHERICALCAGE v1",
        f"N {cage.n}",
        f"r_s {cage.r_s!r}",
        f"radius {cage.radius!r}",
        f"max_edge {cage.max_edge!r}",
        f"unit_max_edge {cage.unit_max_edge!r}",
        f"shrink_factor {cage.shrink_factor!r}",
        "origin " + " ".join(repr(float(v)) for v in cage.origin),
        "centers",
    ]
    lines += [" ".join(repr(float(v)) for v in c) for c in cage.centers]
    lines.append("unit_points")
    lines += [" ".join(repr(float(v)) for v in p) for p in cage.unit_points]
    lines.append(f"edges {len(cage.edges)}")
    lines += [f"{i} {j}" for i, j in cage.edges]
    lines.append(f"faces {len(cage.faces)}")
    lines += [" ".join(str(int(v)) for v in f) for f in cage.faces]
    if poses is not None:
        lines.append(f"poses {len(poses)}")
        for p in poses:
            vals = [*p.position, *p.orientation]
            lines.append(" ".join(repr(float(v)) for v in vals) + f" {p.sensor.kind}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_cage(path) -> tuple[SphericalCage, list[AuvPose] | None]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "SPHERICALCAGE v1":
        raise ParameterError(f"{path}: not a cage file")
    it = iter(lines[1:])
    head = {}
    for _ in range(7):
        key, *vals = next(it).split()
        head[key] = vals
    n = int(head["N"][0])
    r_s = float(head["r_s"][0])

    def floats(k):
        return np.array([[float(v) for v in next(it).split()] for _ in range(k)])

    assert next(it) == "centers"
    centers = floats(n)
    assert next(it) == "unit_points"
    unit = floats(n)
    n_edges = int(next(it).split()[1])
    edges = [tuple(int(v) for v in next(it).split()) for _ in range(n_edges)]
    n_faces = int(next(it).split()[1])
    faces = np.array([[int(v) for v in next(it).split()] for _ in range(n_faces)], dtype=int)
    cage = SphericalCage(
        centers=centers,
        radius=float(head["radius"][0]),
        r_s=r_s,
        max_edge=float(head["max_edge"][0]),
        edges=edges,
        faces=faces,
        unit_points=unit,
        origin=np.array([float(v) for v in head["origin"]]),
        unit_max_edge=float(head["unit_max_edge"][0]),
        shrink_factor=float(head["shrink_factor"][0]),
    )
    poses = None
    rest = next(it, None)
    if rest is not None and rest.startswith("poses"):
        poses = []
        for _ in range(int(rest.split()[1])):
            *vals, kind = next(it).split()
            v = [float(x) for x in vals]
            h = math.dist(v[:3], cage.origin) - cage.radius if kind == "cone" else 0.0
            poses.append(AuvPose(v[:3], v[3:], SensorModel(kind, r_s, round(h, 9))))
    return cage, poses


def write_mesh(path, cage: SphericalCage) -> None:
    """Wavefront OBJ of the disc centers and hull triangles."""
    lines = [f"# spherical cage N={cage.n} radius={cage.radius!r}"]
    lines += ["v " + " ".join(repr(float(v)) for v in c) for c in cage.centers]
    lines += ["f " + " ".join(str(int(i) + 1) for i in f) for f in cage.faces]
    Path(path).write_text("\n".join(lines) + "\n")


def write_stats_csv(path, stats_list) -> None:
    """Per-trial rows (N, trial, l_max, final_radius, verified_radius)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "trial", "l_max", "final_radius", "verified_radius"])
        for st in stats_list:
            for k in range(len(st.seeds)):
                writer.writerow(
                    [st.n, k, repr(float(st.l_max[k])), repr(float(st.radius[k])), repr(float(st.verified_radius[k]))]
                )
