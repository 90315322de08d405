"""Exception hierarchy shared by all modules."""


class GafunError(Exception):
    """Base class for every error raised by the package."""


class DomainError(GafunError):
    """Inconsistent family, ambient set or sector parameters."""


class SamplingError(GafunError):
    """A requested sample grid cannot be produced."""


class EvaluationError(GafunError):
    """Evaluation of a representative failed at some point.

    ``index`` is the position of the first offending point in the evaluated
    batch (or None), ``point`` the point itself once the caller knows it.
    """

    def __init__(self, message, index=None, point=None):
        super().__init__(message)
        self.index = index
        self.point = point

    def at(self, point):
        err = type(self)(f"{self.args[0]} at {point!r}", self.index, point)
        return err


class PoleError(EvaluationError):
    """Division by zero or a kernel pole on the integration path."""


class BranchCutError(EvaluationError):
    """Argument of log/sqrt/atan lies on the principal branch cut."""


class QuadratureError(EvaluationError):
    """Adaptive quadrature failed to reach tolerance within its budget."""


class ParseError(GafunError):
    """Malformed expression; ``position`` is a 0-based character offset."""

    def __init__(self, message, text="", position=0):
        caret = ""
        if text:
            caret = f"\n  {text}\n  {' ' * position}^"
        super().__init__(f"{message} (position {position}){caret}")
        self.position = position
        self.text = text


class WeightFormError(GafunError):
    """A weight function left the supported catalog of forms."""


class FamilyMismatchError(GafunError):
    """The shrinking family cannot host the requested embedding."""


class PreconditionError(GafunError):
    """An operation's documented precondition does not hold."""


class FitError(GafunError):
    """A log-log fit is ill-conditioned (too few usable points)."""


class ConfigError(GafunError):
    """Invalid CLI configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        loc = f"line {line}: " if line else ""
        super().__init__(f"{loc}{message}")
        self.line = line
