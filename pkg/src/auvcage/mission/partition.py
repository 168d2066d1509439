"""Voxel flood fill deciding whether AUV sensors partition the free space.

Free space is voxelized at cell resolution: voxel ``(row, col, k)`` spans the
cell horizontally and ``z in [-(k+1)*dz, -k*dz]``; it is water when any part
of the layer lies above the seabed. Contamination spreads between adjacent
water voxels through their shared face unless every sample point of the
water part of that face lies inside some sensing volume.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..bathymetry import DepthMap
from ..sensors import covered_by_any

__all__ = ["CageComponent", "cage_component", "cage_partitions_check", "trace_step"]


@dataclass(frozen=True, eq=False)
class CageComponent:
    """Voxels reachable from the contaminated cells without crossing sensors."""

    mask: np.ndarray  # (height, width, layers)
    dz: float
    reached_boundary: bool
    depth_map: DepthMap

    def voxel_of(self, point) -> tuple[int, int, int] | None:
        x, y, z = (float(v) for v in point)
        cell = self.depth_map.cell_of(x, y)
        if cell is None:
            return None
        k = min(max(int(-z // self.dz), 0), self.mask.shape[2] - 1)
        return cell[0], cell[1], k

    def contains(self, point) -> bool:
        v = self.voxel_of(point)
        return v is not None and bool(self.mask[v])


def _water_voxels(depth_map: DepthMap, dz: float) -> np.ndarray:
    layers = max(1, math.ceil(float(depth_map.depths.max()) / dz))
    tops = np.arange(layers) * dz
    return depth_map.depths[:, :, None] > tops[None, None, :]


def _face_points(lo, hi, z_top, z_bot, n, axis, level):
    """Sample lattice on an axis-aligned face; ``axis`` is the fixed coordinate."""
    s = np.linspace(lo, hi, n)
    z = np.linspace(z_top, z_bot, n)
    ss, zz = np.meshgrid(s, z, indexing="ij")
    fixed = np.full(ss.shape, level)
    if axis == "x":
        return np.stack([fixed, ss, zz], axis=-1).reshape(-1, 3)
    return np.stack([ss, fixed, zz], axis=-1).reshape(-1, 3)


def _reach(auvs) -> tuple[np.ndarray, float]:
    if not auvs:
        return np.zeros((0, 3)), 0.0
    pos = np.array([a.position for a in auvs])
    reach = max(math.hypot(a.sensor.r_s, a.sensor.h) for a in auvs)
    return pos, reach


def _blocked_faces(auvs, depth_map: DepthMap, water, dz, n):
    """Boolean masks of blocked east, south and down faces."""
    h, w, layers = water.shape
    cs = depth_map.cell_size
    d = depth_map.depths
    east = np.zeros((h, w - 1, layers), dtype=bool)
    south = np.zeros((h - 1, w, layers), dtype=bool)
    down = np.zeros((h, w, max(layers - 1, 0)), dtype=bool)
    pos, reach = _reach(auvs)
    if not len(pos):
        return east, south, down
    slack = reach + cs  # face half-diagonal never exceeds one cell

    def near(center):
        return np.min(np.linalg.norm(pos - center, axis=1)) <= slack

    for r, c, k in zip(*np.nonzero(water[:, :-1, :] & water[:, 1:, :])):
        floor = min(d[r, c], d[r, c + 1], (k + 1) * dz)
        x = (c + 1) * cs
        if not near(np.array([x, (r + 0.5) * cs, -(k * dz + floor) / 2])):
            continue
        pts = _face_points(r * cs, (r + 1) * cs, -k * dz, -floor, n, "x", x)
        east[r, c, k] = covered_by_any(auvs, pts).all()
    for r, c, k in zip(*np.nonzero(water[:-1, :, :] & water[1:, :, :])):
        floor = min(d[r, c], d[r + 1, c], (k + 1) * dz)
        y = (r + 1) * cs
        if not near(np.array([(c + 0.5) * cs, y, -(k * dz + floor) / 2])):
            continue
        pts = _face_points(c * cs, (c + 1) * cs, -k * dz, -floor, n, "y", y)
        south[r, c, k] = covered_by_any(auvs, pts).all()
    for r, c, k in zip(*np.nonzero(water[:, :, :-1] & water[:, :, 1:])):
        z = -(k + 1) * dz
        if not near(np.array([(c + 0.5) * cs, (r + 0.5) * cs, z])):
            continue
        g = np.linspace(0.0, cs, n)
        xx, yy = np.meshgrid(c * cs + g, r * cs + g, indexing="ij")
        pts = np.stack([xx.ravel(), yy.ravel(), np.full(xx.size, z)], axis=-1)
        down[r, c, k] = covered_by_any(auvs, pts).all()
    return east, south, down


def cage_component(auvs, depth_map: DepthMap, cells, dz: float | None = None, face_samples: int = 5) -> CageComponent:
    """Flood fill from the contaminated cells' water voxels."""
    dz = depth_map.cell_size if dz is None else float(dz)
    water = _water_voxels(depth_map, dz)
    east, south, down = _blocked_faces(list(auvs), depth_map, water, dz, face_samples)
    h, w, layers = water.shape
    mask = np.zeros_like(water)
    queue = deque()
    for r, c in sorted(cells):
        for k in np.flatnonzero(water[r, c]):
            if not mask[r, c, k]:
                mask[r, c, k] = True
                queue.append((r, c, int(k)))
    reached = False
    while queue:
        r, c, k = queue.popleft()
        if r in (0, h - 1) or c in (0, w - 1):
            reached = True
        steps = (
            (r, c + 1, k, c + 1 < w and not east[r, c, k]),
            (r, c - 1, k, c > 0 and not east[r, c - 1, k]),
            (r + 1, c, k, r + 1 < h and not south[r, c, k]),
            (r - 1, c, k, r > 0 and not south[r - 1, c, k]),
            (r, c, k + 1, k + 1 < layers and not down[r, c, k]),
            (r, c, k - 1, k > 0 and not down[r, c, k - 1]),
        )
        for rr, cc, kk, open_ in steps:
            if open_ and water[rr, cc, kk] and not mask[rr, cc, kk]:
                mask[rr, cc, kk] = True
                queue.append((rr, cc, kk))
    return CageComponent(mask, dz, reached, depth_map)


def cage_partitions_check(auvs, depth_map: DepthMap, cells, dz: float | None = None, face_samples: int = 5) -> bool:
    """True iff the sensors cut the contaminated cells off from the map boundary."""
    if not cells:
        return False
    return not cage_component(auvs, depth_map, cells, dz, face_samples).reached_boundary


def _crossings(p0, p1, cs, dz):
    """Parameters in [0, 1] where the voxel index changes, sorted.

    Voxel indices are ``floor(x/cs)``, ``floor(y/cs)`` and ``floor(-z/dz)``,
    so a point lying exactly on a plane belongs to the upper voxel.
    """
    ts = []
    for axis, pitch, sign in ((0, cs, 1.0), (1, cs, 1.0), (2, dz, -1.0)):
        a, b = sign * p0[axis], sign * p1[axis]
        if a == b:
            continue
        lo, hi = sorted((a, b))
        for m in range(math.floor(lo / pitch) + 1, math.floor(hi / pitch) + 1):
            ts.append(((m * pitch - a) / (b - a), axis))
    return sorted(ts)


def trace_step(p0, p1, component: CageComponent, auvs) -> str:
    """Classify a straight move of the entity against a cage component.

    Returns ``"moved"`` (stayed inside or never was inside), ``"blocked"``
    (the move runs into land, seabed or air), ``"detected"`` (left the
    component through a sensed point) or ``"escaped"`` (left it unsensed).
    """
    m = component.depth_map
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    inside = component.contains(p0)
    if not m.in_free_space(p1):
        w, h = m.extent
        if not (0 <= p1[0] <= w and 0 <= p1[1] <= h):
            return "escaped" if inside else "moved"
        return "blocked"
    if not inside:
        return "moved"
    cs, dz = m.cell_size, component.dz
    for t, axis in _crossings(p0, p1, cs, dz):
        q = p0 + t * (p1 - p0)
        ahead = p0 + min(1.0, t + 1e-9) * (p1 - p0)
        vox = component.voxel_of(ahead)
        if vox is None:
            return "detected" if covered_by_any(auvs, q[None])[0] else "escaped"
        if axis < 2:
            behind = p0 + max(0.0, t - 1e-9) * (p1 - p0)
            c0, c1 = m.cell_of(*behind[:2]), m.cell_of(*ahead[:2])
            floor = min(m.depths[c0], m.depths[c1])
            if floor == 0.0 or q[2] < -floor:
                return "blocked"
        if not component.mask[vox]:
            return "detected" if covered_by_any(auvs, q[None])[0] else "escaped"
    return "moved"
