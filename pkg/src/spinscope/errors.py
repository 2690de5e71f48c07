"""Exception hierarchy shared by all spinscope modules."""


class SpinscopeError(Exception):
    """Base class for all package errors."""


class ValidationError(SpinscopeError, ValueError):
    """An input violates a documented invariant.

    ``field`` names the offending field when one can be identified.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ParseError(SpinscopeError, ValueError):
    """A file could not be decoded."""


class DegenerateFrameError(SpinscopeError, ValueError):
    """A nuclear precession frequency vanishes (level crossing)."""


class SizeError(SpinscopeError, ValueError):
    """The register is too large for the exact simulator."""


class DomainError(SpinscopeError, ArithmeticError):
    """A trigonometric argument left its domain by more than rounding noise."""
