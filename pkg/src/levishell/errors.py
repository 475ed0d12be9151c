"""Exception hierarchy.

Numerical failures (``NumericalError`` subclasses) map to CLI exit code 3;
``SpecError`` and ``ArgumentError`` map to exit code 2.
"""


class LeviShellError(Exception):
    pass


class ArgumentError(LeviShellError, ValueError):
    """Bad argument: dimension mismatch, non-unitary matrix, negative aperture."""


class SpecError(LeviShellError, ValueError):
    """Malformed or invalid domain description."""

    def __init__(self, message, field=None):
        self.field = field
        self.message = message
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class DomainError(ArgumentError):
    """Point outside the bounding box or on the wrong side of the boundary."""


class NumericalError(LeviShellError, ArithmeticError):
    pass


class ConvergenceError(NumericalError):
    pass


class AmbiguityError(NumericalError):
    """Two distinct nearest boundary points: the point is off the tubular neighborhood."""


class AccuracyError(NumericalError):
    pass


class SingularPointError(NumericalError):
    """Evaluation at a point where the squared distance vanishes."""


class SamplingError(NumericalError):
    pass
