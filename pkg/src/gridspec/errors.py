"""Exception hierarchy shared by every gridspec module."""


class GridSpecError(Exception):
    """Base class for all toolkit errors."""


class InvalidParams(GridSpecError, ValueError):
    pass


class EvaluationAtPole(GridSpecError, ArithmeticError):
    pass


class DegenerateDenominator(GridSpecError, ValueError):
    pass


class PoleAtZero(GridSpecError):
    """The bus transfer function integrates; the decentralized condition does not apply."""


class NotHurwitz(GridSpecError):
    pass


class GridMismatch(GridSpecError, ValueError):
    pass


class UndampedLine(GridSpecError, ValueError):
    pass


class NoSteadyState(GridSpecError):
    pass


class NumericalDivergence(GridSpecError, ArithmeticError):
    pass


class NonIntegerWindow(GridSpecError, ValueError):
    pass


class UndersampledSignal(GridSpecError, ValueError):
    pass


class IllConditioned(GridSpecError, ArithmeticError):
    pass


class ConfigError(GridSpecError, ValueError):
    """Configuration problem; ``key`` names the offending entry when known."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
