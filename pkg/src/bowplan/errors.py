"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """An argument violates a precondition (non-finite value, bad dimension, ...)."""


class GenerationError(RuntimeError):
    """A procedural environment could not be generated with the given parameters."""


class NumericalError(ArithmeticError):
    """A factorization failed even after jitter escalation."""


class WorldParseError(ValueError):
    """A world/scenario document is malformed.

    The offending field path is available as ``field``.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class UnsupportedFeatureError(WorldParseError):
    """A document requests something this package does not model (e.g. unknown shape)."""
