"""Exception types raised across the package."""


class LevyLilError(Exception):
    """Base class for all package errors."""


class DomainError(LevyLilError, ValueError):
    """An argument lies outside the domain of the operation."""


class ExtrapolationError(DomainError):
    """A tabulated function was queried outside its table."""


class NumericError(LevyLilError, ArithmeticError):
    """A numerical routine failed to converge or to bracket a root."""


class StatisticalError(LevyLilError):
    """Not enough Monte Carlo evidence to compute the requested statistic."""


class CoverageError(LevyLilError):
    """Spatial centers do not cover the visited set of a path."""


class LadderError(DomainError):
    """A time ladder leaves the domain of the requested rate function."""


class ResourceError(LevyLilError, MemoryError):
    """An ensemble could not be generated within available resources."""


class ConflictError(LevyLilError):
    """Two result records share a config hash but disagree on metrics."""
