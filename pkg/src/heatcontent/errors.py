"""Exception and warning types shared across the package."""


class HeatContentError(Exception):
    """Base class for all errors raised by heatcontent."""


class PoleError(HeatContentError, ZeroDivisionError):
    """An argument sits on (or within the guard radius of) a pole."""


class DomainError(HeatContentError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class ConvergenceError(HeatContentError, RuntimeError):
    """An iterative or self-checking numerical procedure did not converge."""


class ValidationError(HeatContentError, ValueError):
    """A scenario/config document failed validation.

    ``field`` names the offending entry using dotted notation.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class IllConditionedWarning(UserWarning):
    """A least-squares fit was solved with a condition number above threshold."""
