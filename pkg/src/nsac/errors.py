"""Exception types raised across the package."""


class NSACError(Exception):
    """Base class for all package errors."""


class ConfigurationError(NSACError, ValueError):
    """Invalid grid, field layout, or configuration value."""


class DomainError(NSACError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class StepSizeError(NSACError, ValueError):
    """A time step violates a stability (CFL) limit."""

    def __init__(self, message, dt=None, limit=None):
        super().__init__(message)
        self.dt = dt
        self.limit = limit


class SolverError(NSACError, RuntimeError):
    """An iterative linear solve failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
