"""Exception hierarchy shared by all weylkit modules."""


class WeylkitError(Exception):
    """Base class for all weylkit errors."""


class StructuralError(WeylkitError):
    """Malformed input: dimension mismatch, incompatible grids, bad schema.

    Structural problems are bugs in the call, not failed validations, and
    map to CLI exit code 2.
    """


class DomainError(WeylkitError):
    """Argument outside the mathematical domain of an operation."""


class SingularityError(WeylkitError):
    """Evaluation point too close to a pole or a singular denominator."""


class PositivityError(WeylkitError):
    """A structured operator that must be positive definite is not.

    Attributes
    ----------
    minor : int or None
        Size of the offending leading principal minor when known.
    """

    def __init__(self, message, minor=None):
        super().__init__(message)
        self.minor = minor


class ValidationError(WeylkitError):
    """Input failed a mandatory validation; carries the full report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}
