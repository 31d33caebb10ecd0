"""Exception hierarchy shared across the package."""


class DamLabError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DamLabError, ValueError):
    """Shapes of two operands do not conform."""


class DomainError(DamLabError, ValueError):
    """A numeric input lies outside the domain of an operation."""


class StateError(DamLabError, RuntimeError):
    """An operation was called out of order (e.g. backward before forward)."""


class ConfigError(DamLabError, ValueError):
    """An experiment configuration value is missing, unknown or out of range."""


class StructuralError(DamLabError, RuntimeError):
    """A network has a structure that makes the requested operation impossible."""


class DataFormatError(DamLabError, ValueError):
    """An on-disk dataset file is malformed."""


class DivergenceError(DamLabError, RuntimeError):
    """Training produced a non-finite loss.  Carries the trace up to the last
    finite epoch in ``trace``."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
