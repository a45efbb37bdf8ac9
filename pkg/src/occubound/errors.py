"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SupportError(DomainError):
    """A profile function lacks the finite support / tail declaration needed."""


class MonotonicityError(DomainError):
    """A time profile violates the required monotonicity in its time variable."""


class ToleranceError(ArithmeticError):
    """Adaptive refinement exhausted its budget before meeting the tolerance."""
