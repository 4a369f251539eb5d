"""Exception hierarchy shared by every module."""


class SasakiGeoError(Exception):
    """Base class for all library errors."""


class DomainError(SasakiGeoError, ValueError):
    """A point (or a finite-difference stencil point) lies outside the chart."""


class NumericError(SasakiGeoError, ArithmeticError):
    """A non-finite value appeared during evaluation."""


class GeometryError(SasakiGeoError, ValueError):
    """A metric or Gram matrix is singular or not positive-definite."""


class RankError(SasakiGeoError, ValueError):
    """A seed family for a frame is linearly dependent."""


class ShapeError(SasakiGeoError, ValueError):
    """Tensor slot extents do not match."""


class ConfigurationError(SasakiGeoError, ValueError):
    """Invalid manifold specification, grid, or run configuration."""


class PreconditionError(SasakiGeoError, ValueError):
    """An operation was called outside its stated hypotheses."""


class DivergenceError(SasakiGeoError, ArithmeticError):
    """Integration produced a non-finite state.

    The trajectory computed up to the failure is kept on ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
