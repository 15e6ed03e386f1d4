"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an input value is outside the admissible domain (NaN, inf, negative counts, ...)."""


class ShapeError(ValueError):
    """Raised when array dimensions are not conformable."""


class CapacityError(RuntimeError):
    """Raised when a request exceeds a hard resource ceiling (e.g. subset enumeration limit)."""


class DivergenceError(RuntimeError):
    """Raised when an iterated simulation leaves the representable range."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step
