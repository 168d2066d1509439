"""Multi-AUV caging: containing barriers on bathymetry and shrinkable spherical capture cages."""

from .assignment import Assignment, is_reachable_cage, solve_lbap, travel_time, travel_time_matrix
from .barrier_cover import BarrierSegment, CoverSolution, cover_barrier, greedy_cover
from .bathymetry import ContaminatedSet, DepthMap, Sighting, contaminated_cells, generate_depth_map
from .errors import (
    CageError,
    ContainmentImpossible,
    CoverageError,
    GeometryError,
    InfeasibleCover,
    InsufficientAgents,
    NumericError,
    ParameterError,
    ScenarioError,
    TemporalOrderError,
)
from .graphcut import BarrierGraph, CutResult, build_barrier_graph, cut_to_barrier_segments, min_cut
from .sensors import AuvPose, SensorModel
from .spherical_cage import (
    SphereConfig,
    SphericalCage,
    build_spherical_cage,
    capture_radius_stats,
    init_sphere_points,
    relax_charges,
    scale_to_cage,
    spherical_delaunay,
    verify_coverage,
)

__version__ = "0.1.0"
