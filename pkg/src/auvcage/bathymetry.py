"""Operating volume: depth grid, free space and the growing contaminated set.

Grid convention: ``depths[row, col]``; cell ``(row, col)`` spans
``x in [col*cs, (col+1)*cs]`` and ``y in [row*cs, (row+1)*cs]``; its vertex
position is the cell center. The surface is the plane ``z = 0`` and the
seabed under a cell lies at ``z = -depth``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ContainmentImpossible, ParameterError, TemporalOrderError

__all__ = [
    "DepthMap",
    "Sighting",
    "ContaminatedSet",
    "Membership",
    "generate_depth_map",
    "contaminated_radius",
    "contains",
    "contaminated_cells",
    "ball_cells",
    "read_depth_map",
    "write_depth_map",
]

Cell = tuple[int, int]

_HEADER = "DEPTHMAP v1"


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Heightfield bathymetry. A depth of 0 marks a land (island) cell."""

    width: int
    height: int
    cell_size: float
    depths: np.ndarray

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ParameterError(f"map must be at least 2x2 cells, got {self.width}x{self.height}")
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise ParameterError(f"cell_size must be positive, got {self.cell_size}")
        depths = np.array(self.depths, dtype=float)
        if depths.shape != (self.height, self.width):
            raise ParameterError(
                f"depth grid shape {depths.shape} does not match {self.height}x{self.width}"
            )
        if not np.all(np.isfinite(depths)) or np.any(depths < 0):
            raise ParameterError("depths must be finite and non-negative")
        depths.setflags(write=False)
        object.__setattr__(self, "depths", depths)
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @property
    def extent(self) -> tuple[float, float]:
        return self.width * self.cell_size, self.height * self.cell_size

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def index(self, cell: Cell) -> int:
        return cell[0] * self.width + cell[1]

    def cell_of_index(self, idx: int) -> Cell:
        return divmod(int(idx), self.width)

    def cell_center(self, cell: Cell) -> np.ndarray:
        r, c = cell
        return np.array([(c + 0.5) * self.cell_size, (r + 0.5) * self.cell_size])

    def cell_of(self, x: float, y: float) -> Cell | None:
        """Cell under a horizontal position, or None when off the map."""
        w, h = self.extent
        if not (0.0 <= x <= w and 0.0 <= y <= h):
            return None
        c = min(int(x // self.cell_size), self.width - 1)
        r = min(int(y // self.cell_size), self.height - 1)
        return r, c

    def depth_at(self, cell: Cell) -> float:
        return float(self.depths[cell])

    def is_land(self, cell: Cell) -> bool:
        return self.depths[cell] == 0.0

    def on_boundary(self, cell: Cell) -> bool:
        r, c = cell
        return r == 0 or c == 0 or r == self.height - 1 or c == self.width - 1

    def in_free_space(self, point) -> bool:
        """True for points below the surface, above the seabed, over water."""
        x, y, z = (float(v) for v in point)
        cell = self.cell_of(x, y)
        if cell is None:
            return False
        d = self.depths[cell]
        return d > 0.0 and -d <= z <= 0.0

    def __eq__(self, other):
        if not isinstance(other, DepthMap):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.cell_size == other.cell_size
            and np.array_equal(self.depths, other.depths)
        )

    __hash__ = None


@dataclass(frozen=True)
class Sighting:
    position: tuple[float, float, float]
    time: float = 0.0

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
            raise ParameterError(f"sighting position must be a finite 3D point, got {self.position}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "time", float(self.time))


@dataclass(frozen=True)
class ContaminatedSet:
    """Reachable region of the entity since its last sighting.

    Modeled as the Euclidean growth ball around the sighting clipped to free
    space, a sound overapproximation of the true reachable set.
    """

    origin: Sighting
    max_entity_speed: float
    map: DepthMap = field(repr=False)

    def __post_init__(self):
        if not (self.max_entity_speed >= 0 and math.isfinite(self.max_entity_speed)):
            raise ParameterError(f"entity speed must be >= 0, got {self.max_entity_speed}")


@dataclass(frozen=True)
class Membership:
    """Result of a containment query; truthy iff the point is contaminated."""

    inside: bool
    off_map: bool = False

    def __bool__(self):
        return self.inside


def contaminated_radius(cs: ContaminatedSet, t: float) -> float:
    """Radius ``v_e * (t - t_k)`` of the growth ball at time ``t``."""
    dt = t - cs.origin.time
    if dt < 0:
        raise TemporalOrderError(f"query time {t} precedes sighting at {cs.origin.time}")
    return cs.max_entity_speed * dt


def contains(cs: ContaminatedSet, point, t: float) -> Membership:
    r = contaminated_radius(cs, t)
    p = np.asarray(point, dtype=float)
    if cs.map.cell_of(p[0], p[1]) is None:
        return Membership(False, off_map=True)
    dist = float(np.linalg.norm(p - np.asarray(cs.origin.position)))
    return Membership(bool(dist <= r and cs.map.in_free_space(p)))


def contaminated_cells(cs: ContaminatedSet, t: float) -> frozenset[Cell]:
    """Water cells whose centers lie in the horizontal projection of the ball.

    Raises ContainmentImpossible once the ball touches the map edge.
    """
    return ball_cells(cs.map, cs.origin.position, contaminated_radius(cs, t))


def ball_cells(depth_map: DepthMap, origin, r: float) -> frozenset[Cell]:
    """Water cells within horizontal distance ``r`` of ``origin``, plus its own cell."""
    m = depth_map
    x, y = float(origin[0]), float(origin[1])
    w, h = m.extent
    home = m.cell_of(x, y)
    if home is None or m.is_land(home):
        raise ParameterError(f"point {tuple(origin)} is not over water on the map")
    if x - r <= 0.0 or y - r <= 0.0 or x + r >= w or y + r >= h:
        raise ContainmentImpossible(
            f"growth ball of radius {r:.3f} m around ({x:.3f}, {y:.3f}) reaches the map edge"
        )
    cols = (np.arange(m.width) + 0.5) * m.cell_size
    rows = (np.arange(m.height) + 0.5) * m.cell_size
    d2 = (rows[:, None] - y) ** 2 + (cols[None, :] - x) ** 2
    mask = (d2 <= r * r) & (m.depths > 0)
    mask[home] = True
    return frozenset((int(i), int(j)) for i, j in zip(*np.nonzero(mask)))


def _value_noise(rng: np.random.Generator, height: int, width: int, spacing: int) -> np.ndarray:
    ny = height // spacing + 2
    nx = width // spacing + 2
    lattice = rng.random((ny, nx))
    rr, cc = np.meshgrid(np.arange(height) / spacing, np.arange(width) / spacing, indexing="ij")
    return ndimage.map_coordinates(lattice, [rr, cc], order=1, mode="nearest")


def generate_depth_map(
    seed: int,
    width: int,
    height: int,
    cell_size: float,
    roughness: float = 1.0,
    island_threshold: float = 10.0,
    min_depth: float = 1.0,
    max_depth: float = 50.0,
) -> DepthMap:
    """Random bathymetry from smoothed value noise.

    Two octaves of lattice noise are bilinearly upsampled and box-blurred;
    ``roughness`` shortens the lattice pitch and reduces the blur passes.
    The field is rescaled to ``[min_depth, max_depth]`` meters and every
    cell shallower than ``island_threshold`` becomes land (depth 0).
    """
    if width < 8 or height < 8:
        raise ParameterError(f"generated maps need at least 8x8 cells, got {width}x{height}")
    if not roughness > 0:
        raise ParameterError(f"roughness must be > 0, got {roughness}")
    if not 0 < min_depth <= max_depth:
        raise ParameterError("need 0 < min_depth <= max_depth")
    rng = np.random.default_rng(seed)
    spacing = max(2, int(round(8.0 / roughness)))
    passes = max(0, int(round(3.0 / roughness)))
    field_ = _value_noise(rng, height, width, spacing)
    field_ += 0.5 * _value_noise(rng, height, width, max(1, spacing // 2))
    for _ in range(passes):
        field_ = ndimage.uniform_filter(field_, size=3, mode="nearest")
    lo, hi = field_.min(), field_.max()
    unit = (field_ - lo) / (hi - lo) if hi > lo else np.full_like(field_, 0.5)
    depths = min_depth + (max_depth - min_depth) * unit
    depths[depths < island_threshold] = 0.0
    return DepthMap(width, height, cell_size, depths)


def write_depth_map(path, depth_map: DepthMap) -> None:
    lines = [_HEADER, f"{depth_map.width} {depth_map.height} {depth_map.cell_size!r}"]
    for row in depth_map.depths:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_depth_map(path) -> DepthMap:
    text = Path(path).read_text().split()
    if len(text) < 5 or " ".join(text[:2]) != _HEADER:
        raise ParameterError(f"{path}: not a {_HEADER} file")
    try:
        width, height = int(text[2]), int(text[3])
        cell_size = float(text[4])
        values = np.array([float(v) for v in text[5:]])
    except ValueError as exc:
        raise ParameterError(f"{path}: {exc}") from None
    if values.size != width * height:
        raise ParameterError(f"{path}: expected {width * height} depths, found {values.size}")
    return DepthMap(width, height, cell_size, values.reshape(height, width))
