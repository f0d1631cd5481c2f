"""Exception types shared across the package."""


class DWEulerError(Exception):
    """Base class for all package-specific errors."""


class DomainError(DWEulerError, ValueError):
    """Thermodynamic evaluation outside its domain (e.g. rho <= 0)."""


class UsageError(DWEulerError, ValueError):
    """A caller violated an API contract (bad grids, bad arguments)."""


class InvalidStateError(DWEulerError, ValueError):
    """A field holds values no physical state may have (NaN, p <= 0, ...)."""


class StepRejected(DWEulerError, RuntimeError):
    """A time step violated a positivity/entropy guard and was rejected."""


class SolverFailure(DWEulerError, RuntimeError):
    """A run could not continue even after bounded time-step halving."""

    def __init__(self, message, state=None, t=None):
        super().__init__(message)
        self.state = state
        self.t = t


class FormatError(DWEulerError, ValueError):
    """A file did not conform to the documented on-disk format."""
