"""Exception hierarchy shared by every module of the package."""


class QsoError(Exception):
    """Base class for all package errors."""


class ModelError(QsoError, ValueError):
    """A graph, alphabet, measure or model file is invalid."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class CapExceeded(QsoError):
    """An enumeration or materialization would exceed its size cap."""

    def __init__(self, what, required, cap):
        super().__init__(f"{what} requires {required} entries but the cap is {cap}")
        self.what = what
        self.required = required
        self.cap = cap


class DimensionMismatch(QsoError, ValueError):
    pass


class NotVolterra(QsoError):
    pass


class NumericalIntegrityError(QsoError, ArithmeticError):
    """An iterate drifted off the simplex beyond the allowed tolerance."""


class TooShort(QsoError, ValueError):
    pass


class InconsistentMarginals(QsoError, ValueError):
    pass


class DegenerateCoefficients(QsoError):
    """Some off-diagonal Volterra coefficients vanish, so no tournament exists."""

    def __init__(self, pairs):
        self.pairs = [tuple(p) for p in pairs]
        shown = ", ".join(f"({k + 1},{i + 1})" for k, i in self.pairs)
        super().__init__(f"zero coefficients a_ki for pairs {shown}")


class InsufficientData(QsoError, ValueError):
    pass


class CoordinateZero(QsoError):
    """The coordinate is already extinct, there is nothing left to fit."""
