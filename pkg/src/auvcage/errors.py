"""Exception hierarchy shared by the planning modules."""


class CageError(Exception):
    """Base class for all planner errors."""


class ParameterError(CageError, ValueError):
    """An argument violates a documented precondition."""


class TemporalOrderError(CageError, ValueError):
    """A query time precedes the sighting it refers to."""


class ContainmentImpossible(CageError):
    """The contaminated region reaches the edge of the modeled map."""


class InfeasibleCover(CageError):
    """Some barrier sample cannot be covered by any candidate disc."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InsufficientAgents(CageError):
    """Fewer agents than slots to fill."""


class GeometryError(CageError):
    """Degenerate point configuration (e.g. coplanar hull)."""


class NumericError(CageError):
    """Numerical breakdown, e.g. two charges collided during relaxation."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class CoverageError(CageError):
    """A spherical cage failed coverage verification after the shrink retry."""


class ScenarioError(CageError, ValueError):
    """Malformed or inconsistent scenario description."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
