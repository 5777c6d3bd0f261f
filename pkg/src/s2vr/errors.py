"""Shared exception types for the s2vr package."""


class S2VRError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(S2VRError, ValueError):
    """Array dimensions or layout violate an operation's contract."""


class ParameterError(S2VRError, ValueError):
    """A scalar or structural parameter is out of its valid range."""


class DataError(S2VRError, ValueError):
    """Input data is degenerate (zero variance, identical samples, ...)."""


class AlignmentError(S2VRError, ValueError):
    """Kernel alignment is undefined or degenerate for the given inputs."""


class SolverError(S2VRError, RuntimeError):
    """An iterative solver failed to reach its certified exit condition."""


class GeometryError(S2VRError, ValueError):
    """Landmark geometry is degenerate (coincident corners, ...)."""


class ModeError(S2VRError, ValueError):
    """An operation was applied to a model/vector of the wrong output mode."""


class RenderError(S2VRError, ValueError):
    """Rendering failed (landmarks outside the target frame, ...)."""


class MetricError(S2VRError, ValueError):
    """A metric is undefined for the given inputs (zero variance, ...)."""


class FormatError(S2VRError, ValueError):
    """A serialized artifact is malformed, truncated, or corrupted."""
