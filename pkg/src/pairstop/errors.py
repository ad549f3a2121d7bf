"""Exception types shared across the package."""


class PairstopError(Exception):
    """Base class for all package errors."""


class DegenerateDiffusion(PairstopError):
    """The log-ratio diffusion coefficient is (numerically) zero.

    Raised when lambda = (a11 - 2*a12 + a22)/2 falls at or below the
    degeneracy tolerance: the reduction to a one-dimensional Euler
    problem is meaningless there.
    """


class DiscountTooLow(PairstopError):
    """The discount rate does not dominate both drifts (rho <= mu1 or rho <= mu2)."""


class BadCost(PairstopError):
    """Transaction-cost rate outside [0, 1)."""


class DomainError(PairstopError):
    """An argument is outside the mathematical domain of the operation."""


class NoBracket(PairstopError):
    """The root bracket for the open threshold failed to straddle a sign change.

    Unreachable for validated inputs; raising it indicates a bug or
    pathological floating-point parameters.
    """


class GridError(PairstopError):
    """Invalid verification grid."""


class ParseError(PairstopError):
    """Malformed CSV content.  Carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OrderError(PairstopError):
    """Observation dates are not strictly increasing."""


class TooShort(PairstopError):
    """Fewer observations than the minimum required."""
