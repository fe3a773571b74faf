"""Error types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class DimensionMismatch(ValidationError):
    """Raised when matrix/vector shapes are incompatible."""


class NumericalError(RuntimeError):
    """Raised when an iteration diverges or a tolerance cannot be met."""
