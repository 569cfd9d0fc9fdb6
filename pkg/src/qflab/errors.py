"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class ValidationError(ValueError):
    """An input object violates a structural invariant (e.g. not Hermitian)."""


class ResourceLimitError(RuntimeError):
    """The requested computation exceeds a hard size cap."""


class NumericError(ArithmeticError):
    """A numerical evaluation produced a non-finite value."""


class FitError(RuntimeError):
    """Not enough usable data points for a least-squares fit."""
