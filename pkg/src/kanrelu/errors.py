"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A model, file or report violates one of its structural invariants."""


class ShapeError(ValidationError):
    """Dimensions of an input do not match what the model expects."""


class DomainError(ValueError):
    """An evaluation input lies outside the supported domain."""


class UnsupportedDimensionError(ValueError):
    """The operation only supports a specific input dimension."""


class ParseError(ValueError):
    """A model file could not be parsed or failed schema checks."""
