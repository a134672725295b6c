"""Exception types shared across the package."""


class ItersdeError(Exception):
    """Base class for all package errors."""


class ConfigError(ItersdeError):
    """A configuration file or field failed validation.

    Carries the offending field name so CLI error records can point at it.
    """

    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"config field {field!r}: {reason}")


class ShapeError(ItersdeError):
    """Array or matrix dimensions are inconsistent."""


class ExpressionError(ItersdeError):
    """A coefficient expression could not be parsed or is malformed."""


class EvaluationError(ItersdeError):
    """A coefficient entry produced a non-finite value.

    ``where`` is the textual form of the offending subexpression and
    ``point`` the evaluation point, so the message pinpoints the entry.
    """

    def __init__(self, where, point, detail="produced a non-finite value"):
        self.where = where
        self.point = tuple(float(c) for c in point)
        super().__init__(f"{where} at {self.point} {detail}")


class UnboundedCoefficientError(ItersdeError):
    """An operation requiring bounded coefficients got an unbounded field."""


class PreconditionError(ItersdeError):
    """A documented hypothesis of an operation is violated.

    The message names the hypothesis that failed.
    """


class QuadratureError(ItersdeError):
    """Numerical integration did not reach the requested accuracy.

    ``residual`` is the estimated absolute error of the failing integral.
    """

    def __init__(self, message, residual):
        self.residual = float(residual)
        super().__init__(f"{message} (residual {residual:.3e})")


class DegenerateSymbolError(ItersdeError):
    """A symbol vanished identically where a growth estimate was requested."""
