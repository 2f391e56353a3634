"""Exception types raised across the package."""


class StopgapError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(StopgapError, ValueError):
    """Array shapes are inconsistent with the bound problem."""


class DegenerateProblemError(StopgapError, ValueError):
    """Problem data is degenerate (zero operator, empty spectrum, ...)."""


class ConvergenceError(StopgapError, RuntimeError):
    """An iterative subroutine exhausted its budget before certifying."""


class ConfigError(StopgapError, ValueError):
    """Invalid experiment or solver configuration."""
