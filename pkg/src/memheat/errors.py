"""Exception types shared across the package."""


class MemheatError(Exception):
    """Base class for all package-specific errors."""


class DomainError(MemheatError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class UnsupportedOrderError(MemheatError, ValueError):
    """A Bessel order outside the supported set was requested."""


class OutOfScopeError(MemheatError, ValueError):
    """Parameters fall in a regime the package deliberately does not cover."""


class ConvergenceError(MemheatError, RuntimeError):
    """An iterative or adaptive scheme failed to reach the requested tolerance.

    Carries the worst observed residual in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class QuadratureError(ConvergenceError):
    """A quadrature failed its accuracy target; ``residual`` holds the estimate."""


class TruncationError(MemheatError, RuntimeError):
    """A truncated expansion could not meet its error budget."""


class ConfigError(MemheatError, ValueError):
    """A run configuration file is malformed or inconsistent."""


class ProfileFormatError(MemheatError, ValueError):
    """A serialized profile file is malformed or fails re-validation."""
