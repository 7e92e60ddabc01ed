"""Exception hierarchy.

Every error raised by the engine derives from :class:`RatLoopError`.  The
CLI maps the three families below onto stable exit codes.
"""


class RatLoopError(Exception):
    """Base class."""


class ValidationError(RatLoopError, ValueError):
    """Bad input: violated preconditions, malformed data (exit code 2)."""


class DivisionByZero(ValidationError, ZeroDivisionError):
    pass


class NotPositiveReal(ValidationError):
    pass


class ZeroDenominator(ValidationError):
    pass


class EvalAtPole(ValidationError):
    pass


class BadWindow(ValidationError):
    pass


class PreconditionViolated(ValidationError):
    pass


class InvalidDecomposition(ValidationError):
    pass


class NotNilpotent(ValidationError):
    pass


class NotSkew(ValidationError):
    pass


class NotRealMatrix(ValidationError):
    pass


class AlphaZero(ValidationError):
    pass


class NotNegative(ValidationError):
    pass


class IdenticallySingular(ValidationError):
    pass


class AlreadyIdentity(ValidationError):
    pass


class SZeroImpossible(ValidationError):
    pass


class RealityViolated(ValidationError):
    pass


class GridTooCoarse(ValidationError):
    pass


class ParseError(ValidationError):
    """Malformed serialized data; ``location`` is a JSON-path-like string."""

    def __init__(self, message, location=""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class NotWellDefined(RatLoopError, ArithmeticError):
    """A matrix that must be inverted is singular (exit code 3).

    ``stage`` identifies which link of a chained construction failed
    (1-based), or is ``None`` for single-stage operations.
    """

    def __init__(self, message, stage=None):
        self.stage = stage
        super().__init__(message if stage is None else f"stage {stage}: {message}")


class IrreducibleDenominator(RatLoopError):
    """A polynomial has roots outside every tower the engine can build (exit code 4)."""


class TowerObstruction(IrreducibleDenominator):
    """A square root of a non-rational tower element would be required."""
