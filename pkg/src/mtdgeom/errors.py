"""Exception types shared across the package."""


class MTDError(Exception):
    """Base class for all package errors."""


class ShapeError(MTDError, ValueError):
    pass


class NonIdentifiable(MTDError):
    """Raised when the mixture weights cannot be recovered (all rows of Q equal)."""


class NotInModel(MTDError):
    pass


class BalanceError(MTDError, ValueError):
    pass


class DegenerateDenominator(MTDError, ZeroDivisionError):
    pass


class ZeroMarginal(MTDError, ZeroDivisionError):
    pass


class FormulaMismatch(MTDError, AssertionError):
    """A computed invariant disagrees with its closed-form value."""


class OracleMismatch(MTDError, AssertionError):
    """Two independent counting methods disagree."""
