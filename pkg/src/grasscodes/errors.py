"""Exception types raised across the package."""


class GrassmannError(Exception):
    """Base class for all package errors."""


class DomainError(GrassmannError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class DimensionError(GrassmannError, ValueError):
    pass


class DimensionMismatch(GrassmannError, ValueError):
    pass


class RankDeficient(GrassmannError, ValueError):
    pass


class NoRoot(GrassmannError, ArithmeticError):
    pass


class DegenerateBeta(GrassmannError, ValueError):
    """Raised when beta = pi/2, where both densities vanish identically."""


class PreconditionViolation(GrassmannError, ValueError):
    pass


class InsufficientSamples(GrassmannError, RuntimeError):
    """A Monte-Carlo estimate came back exactly zero (the ball was never hit)."""
