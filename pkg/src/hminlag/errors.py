"""Shared exception types for the geometry library."""


class GeometryError(Exception):
    """Base class for all numerical-geometry failures."""


class DimensionMismatch(GeometryError):
    """Vector / signature dimensions do not agree."""


class DomainError(GeometryError):
    """Parameter outside its admissible range."""


class SingularPointError(GeometryError):
    """Evaluation requested at (or too close to) a flagged singularity."""

    def __init__(self, message, factor=None):
        super().__init__(message)
        self.factor = factor


class IntegrationError(GeometryError):
    """ODE integration failed a conservation or finiteness guard."""


class QuadratureError(GeometryError):
    """Adaptive quadrature did not converge."""


class FrameError(GeometryError):
    """Tangent frame is degenerate or could not be oriented."""


class NumericalQualityError(GeometryError):
    """An internal numerical consistency check failed."""


class PeriodDetectionError(GeometryError):
    """No period return found inside the integrated window (extend t_end)."""
