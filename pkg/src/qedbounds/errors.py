"""Exception types shared across the package."""


class QEDBoundsError(Exception):
    """Base class for all package errors."""


class InvalidInputError(QEDBoundsError, ValueError):
    pass


class ConfigurationError(QEDBoundsError, ValueError):
    pass


class NumericalFailure(QEDBoundsError, RuntimeError):
    """Raised when an iterative or quadrature routine fails to converge.

    ``detail`` carries whatever diagnostic the raising routine had at hand
    (a residual, an error estimate, the best iterate).
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class CapacityError(QEDBoundsError, MemoryError):
    pass


class DegenerateProfileError(InvalidInputError):
    """The trial profile has no support beyond the zero mode."""
