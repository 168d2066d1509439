"""Sensor-disc placement on vertical barrier walls by greedy set cover.

Coverage is certified on a sample lattice of spacing ``s <= r_s / 2``: every
wall point lies within ``s / sqrt(2)`` of a sample, so covering the samples
with discs of the shrunk radius ``r_s - s / sqrt(2)`` covers the whole wall
with radius ``r_s``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleCover, ParameterError

__all__ = [
    "BarrierSegment",
    "CoverSolution",
    "sample_barrier",
    "candidate_centers",
    "greedy_cover",
    "cover_barrier",
    "coplanar_groups",
    "write_cover_csv",
    "read_cover_csv",
]


@dataclass(frozen=True)
class BarrierSegment:
    """Vertical rectangle from the surface down to ``depth`` under a base line.

    ``exterior`` is the horizontal unit normal pointing out of the cage.
    """

    base_start: tuple[float, float]
    base_end: tuple[float, float]
    depth: float
    width: float | None = None
    exterior: tuple[float, float] | None = None

    def __post_init__(self):
        a = tuple(float(v) for v in self.base_start)
        b = tuple(float(v) for v in self.base_end)
        if a == b:
            raise ParameterError("barrier segment base has zero length")
        if not self.depth > 0:
            raise ParameterError(f"barrier depth must be > 0, got {self.depth}")
        object.__setattr__(self, "base_start", a)
        object.__setattr__(self, "base_end", b)
        if self.width is None:
            object.__setattr__(self, "width", math.dist(a, b))
        if self.exterior is None:
            ux, uy = self.direction
            object.__setattr__(self, "exterior", (uy, -ux))

    @property
    def direction(self) -> tuple[float, float]:
        (x0, y0), (x1, y1) = self.base_start, self.base_end
        n = math.hypot(x1 - x0, y1 - y0)
        return (x1 - x0) / n, (y1 - y0) / n

    @property
    def area(self) -> float:
        return self.width * self.depth

    def lattice(self, n_along: int, n_down: int, centered_along=False, centered_down=False):
        """Points ``base_start + s*u`` at depths ``z``, as an (n_along*n_down, 3) array."""
        s = _axis(self.width, n_along, centered_along)
        z = -_axis(self.depth, n_down, centered_down)
        ux, uy = self.direction
        ss, zz = np.meshgrid(s, z, indexing="ij")
        x0, y0 = self.base_start
        return np.column_stack([(x0 + ss * ux).ravel(), (y0 + ss * uy).ravel(), zz.ravel()])


def _axis(extent, n, centered):
    if centered:
        return np.array([extent / 2])
    return np.linspace(0.0, extent, n)


@dataclass(frozen=True, eq=False)
class CoverSolution:
    disc_centers: np.ndarray
    disc_radius: float
    covered_samples: int
    total_samples: int
    normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    segment_ids: list[int] = field(default_factory=list)

    @property
    def n_discs(self) -> int:
        return len(self.disc_centers)


def sample_barrier(segments, spacing: float) -> np.ndarray:
    """Regular lattice over each wall with pitch <= ``spacing``, corners included."""
    return _sample_barrier(segments, spacing)[0]


def _sample_barrier(segments, spacing):
    if not spacing > 0:
        raise ParameterError(f"spacing must be > 0, got {spacing}")
    pts, owner = [], []
    for k, seg in enumerate(segments):
        n_along = math.ceil(seg.width / spacing) + 1
        n_down = math.ceil(seg.depth / spacing) + 1
        p = seg.lattice(n_along, n_down)
        pts.append(p)
        owner.extend([k] * len(p))
    if not pts:
        return np.zeros((0, 3)), np.zeros(0, dtype=int)
    return np.concatenate(pts), np.asarray(owner)


def candidate_centers(segments, r_s: float) -> np.ndarray:
    """Candidate disc centers with pitch ``r_s * sqrt(2) / 2`` on every wall.

    An extent shorter than one pitch gets a single centered row; otherwise the
    lattice spans the extent end to end. Every wall point ends up within
    ``r_s / 2`` of a candidate.
    """
    return _candidate_centers(segments, r_s)[0]


def _candidate_centers(segments, r_s):
    if not r_s > 0:
        raise ParameterError(f"r_s must be > 0, got {r_s}")
    pitch = r_s * math.sqrt(2) / 2
    pts, owner = [], []
    for k, seg in enumerate(segments):
        short_w, short_d = seg.width < pitch, seg.depth < pitch
        n_along = 1 if short_w else math.ceil(seg.width / pitch) + 1
        n_down = 1 if short_d else math.ceil(seg.depth / pitch) + 1
        p = seg.lattice(n_along, n_down, short_w, short_d)
        pts.append(p)
        owner.extend([k] * len(p))
    if not pts:
        return np.zeros((0, 3)), np.zeros(0, dtype=int)
    return np.concatenate(pts), np.asarray(owner)


def greedy_cover(samples, candidates, r_s: float, margin: float = 0.0) -> CoverSolution:
    """Greedy set cover of ``samples`` by discs of radius ``r_s - margin``.

    Each round picks the candidate covering the most uncovered samples,
    lowest index first on ties.
    """
    if not r_s > 0:
        raise ParameterError(f"r_s must be > 0, got {r_s}")
    samples = np.asarray(samples, dtype=float).reshape(-1, 3)
    candidates = np.asarray(candidates, dtype=float).reshape(-1, 3)
    chosen = _greedy_indices(samples, candidates, r_s - margin)
    return CoverSolution(
        disc_centers=candidates[chosen].copy(),
        disc_radius=float(r_s),
        covered_samples=len(samples),
        total_samples=len(samples),
    )


def _greedy_indices(samples, candidates, radius) -> list[int]:
    if len(samples) == 0:
        return []
    if len(candidates) == 0:
        raise InfeasibleCover("no candidate discs", witness=tuple(samples[0]))
    d2 = ((candidates[:, None, :] - samples[None, :, :]) ** 2).sum(-1)
    cover = d2 <= radius * radius * (1 + 1e-12)
    orphan = ~cover.any(axis=0)
    if orphan.any():
        w = tuple(float(v) for v in samples[np.argmax(orphan)])
        raise InfeasibleCover(f"sample {w} is farther than {radius:.6g} m from every candidate", w)
    uncovered = np.ones(len(samples), dtype=bool)
    chosen = []
    counts = cover.sum(axis=1)
    while uncovered.any():
        best = int(np.argmax(counts))
        chosen.append(best)
        uncovered &= ~cover[best]
        counts = cover[:, uncovered].sum(axis=1)
    return chosen


def coplanar_groups(segments, tol: float = 1e-9) -> list[list[int]]:
    """Chains of collinear segments sharing endpoints, i.e. one flat wall each."""
    parent = list(range(len(segments)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    ends: dict[tuple[float, float], list[int]] = {}
    for k, seg in enumerate(segments):
        for p in (seg.base_start, seg.base_end):
            ends.setdefault((round(p[0], 9), round(p[1], 9)), []).append(k)
    for members in ends.values():
        for i in members:
            for j in members:
                if i < j:
                    ui, uj = segments[i].direction, segments[j].direction
                    if abs(ui[0] * uj[1] - ui[1] * uj[0]) <= tol:
                        parent[find(j)] = find(i)
    groups: dict[int, list[int]] = {}
    for k in range(len(segments)):
        groups.setdefault(find(k), []).append(k)
    return sorted(groups.values())


def cover_barrier(segments, r_s: float, spacing: float | None = None) -> CoverSolution:
    """Certified disc cover of all walls; coplanar runs are covered jointly.

    Returns disc centers in wall planes along with each disc's exterior normal
    (used to place conical sensors outside the cage).
    """
    if not r_s > 0:
        raise ParameterError(f"r_s must be > 0, got {r_s}")
    spacing = r_s / 2 if spacing is None else spacing
    if not 0 < spacing <= r_s / 2:
        raise ParameterError("sample spacing must lie in (0, r_s/2]")
    margin = spacing / math.sqrt(2)
    centers, normals, seg_ids = [], [], []
    n_samples = 0
    for group in coplanar_groups(segments):
        segs = [segments[k] for k in group]
        samples, _ = _sample_barrier(segs, spacing)
        cands, owner = _candidate_centers(segs, r_s)
        n_samples += len(samples)
        for idx in _greedy_indices(samples, cands, r_s - margin):
            seg = segs[owner[idx]]
            centers.append(cands[idx])
            normals.append((*seg.exterior, 0.0))
            seg_ids.append(group[owner[idx]])
    return CoverSolution(
        disc_centers=np.array(centers).reshape(-1, 3),
        disc_radius=float(r_s),
        covered_samples=n_samples,
        total_samples=n_samples,
        normals=np.array(normals, dtype=float).reshape(-1, 3),
        segment_ids=seg_ids,
    )


def write_cover_csv(path, cover: CoverSolution) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["disc", "x", "y", "z", "nx", "ny", "nz", "r_s"])
        normals = cover.normals if len(cover.normals) else np.zeros_like(cover.disc_centers)
        for k, (c, n) in enumerate(zip(cover.disc_centers, normals)):
            writer.writerow([k, *map(repr, map(float, c)), *map(repr, map(float, n)), repr(cover.disc_radius)])


def read_cover_csv(path) -> CoverSolution:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    centers = np.array([[float(r["x"]), float(r["y"]), float(r["z"])] for r in rows]).reshape(-1, 3)
    normals = np.array([[float(r["nx"]), float(r["ny"]), float(r["nz"])] for r in rows]).reshape(-1, 3)
    r_s = float(rows[0]["r_s"]) if rows else 0.0
    return CoverSolution(centers, r_s, 0, 0, normals=normals)
