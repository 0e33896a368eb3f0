"""Exception hierarchy shared by every module of the package."""


class RelinvError(Exception):
    """Base class for all errors raised by relinv."""


class SingularHomography(RelinvError, ValueError):
    pass


class PointAtInfinity(RelinvError, ArithmeticError):
    """A point is sent to the line at infinity (denominator s vanishes)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class FrameSolveFailure(RelinvError):
    """No moving frame could be computed for a configuration."""


class DegenerateConfiguration(FrameSolveFailure, ValueError):
    """A determinant or invariant denominator vanishes.

    ``which`` names the vanishing quantity, e.g. ``"delta_123"``.
    """

    def __init__(self, message, which=None):
        super().__init__(message)
        self.which = which


class SingularSystem(FrameSolveFailure):
    pass


class DivisionByZero(RelinvError, ZeroDivisionError):
    """A cochain that must be nowhere vanishing evaluated to zero."""


class UnsupportedArity(RelinvError, ValueError):
    pass


class EvaluationError(RelinvError):
    """A user-supplied function failed while being invariantized."""


class FractionalPowerOfNegative(RelinvError, ValueError):
    pass


class ParseError(RelinvError, ValueError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormat(RelinvError, ValueError):
    pass


class HorizonCrossesSupport(RelinvError, ValueError):
    """The line sent to infinity by a homography meets the image support."""


class InsufficientAcceptance(RelinvError):
    """Too many Monte-Carlo tuples were rejected as near-degenerate."""
