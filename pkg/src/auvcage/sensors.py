"""AUV poses and their sensing volumes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = ["SensorModel", "AuvPose", "covered_by_any"]

_EPS = 1e-9


@dataclass(frozen=True)
class SensorModel:
    """Sphere of radius ``r_s``, or cone of height ``h`` with base radius ``r_s``."""

    kind: str = "sphere"
    r_s: float = 1.0
    h: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sphere", "cone"):
            raise ParameterError(f"sensor kind must be 'sphere' or 'cone', got {self.kind!r}")
        if not self.r_s > 0:
            raise ParameterError(f"r_s must be > 0, got {self.r_s}")
        if not self.h >= 0:
            raise ParameterError(f"h must be >= 0, got {self.h}")
        if (self.h == 0) != (self.kind == "sphere"):
            raise ParameterError("h must be 0 for spherical sensors and > 0 for cones")

    @classmethod
    def from_height(cls, r_s: float, h: float = 0.0) -> "SensorModel":
        return cls("cone" if h > 0 else "sphere", float(r_s), float(h))


@dataclass(frozen=True, eq=False)
class AuvPose:
    position: np.ndarray
    orientation: np.ndarray
    sensor: SensorModel

    def __post_init__(self):
        p = np.array(self.position, dtype=float).reshape(3)
        o = np.array(self.orientation, dtype=float).reshape(3)
        norm = float(np.linalg.norm(o))
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-6:
            raise ParameterError(f"orientation must be a unit vector, got norm {norm}")
        p.setflags(write=False)
        o = o / norm
        o.setflags(write=False)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", o)

    @property
    def disc_center(self) -> np.ndarray:
        """Center of the sensing disc used to build cages."""
        return self.position + self.sensor.h * self.orientation

    def covers(self, points) -> np.ndarray:
        """Boolean mask of ``points`` (..., 3) inside the sensing volume."""
        pts = np.asarray(points, dtype=float)
        rel = pts - self.position
        r_s, h = self.sensor.r_s, self.sensor.h
        if self.sensor.kind == "sphere":
            return np.einsum("...k,...k->...", rel, rel) <= (r_s * (1 + _EPS)) ** 2
        a = rel @ self.orientation
        radial = rel - a[..., None] * self.orientation
        rad = np.sqrt(np.einsum("...k,...k->...", radial, radial))
        return (a >= -_EPS) & (a <= h * (1 + _EPS)) & (rad <= r_s * a / h + r_s * _EPS)

    def moved_to(self, position) -> "AuvPose":
        return AuvPose(position, self.orientation, self.sensor)


def covered_by_any(poses, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    mask = np.zeros(pts.shape[:-1], dtype=bool)
    for pose in poses:
        mask |= pose.covers(pts)
    return mask
