"""Exception types raised by rrcollapse."""


class RRCollapseError(Exception):
    """Base class for all errors raised by this package."""


class InvalidPotentialError(RRCollapseError, ValueError):
    pass


class GridTooSmallError(RRCollapseError, ValueError):
    pass


class SolverFailureError(RRCollapseError, RuntimeError):
    def __init__(self, message, info=None):
        super().__init__(message)
        self.info = info


class BasisTruncationError(RRCollapseError, ValueError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class TimestepTooLargeError(RRCollapseError, ValueError):
    pass


class InsufficientDataError(RRCollapseError, ValueError):
    pass


class IntegratorInstabilityError(RRCollapseError, ArithmeticError):
    pass


class ProbabilityDomainError(RRCollapseError, ValueError):
    pass


class RunawayOverflowError(RRCollapseError, OverflowError):
    """Classical integration produced a non-finite state.

    ``last_state`` holds the last finite state reached.
    """

    def __init__(self, message, last_state):
        super().__init__(message)
        self.last_state = last_state


class ConfigError(RRCollapseError, ValueError):
    """Malformed or invalid experiment configuration."""


class UnknownObservableError(RRCollapseError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ConfigParseError(ConfigError):
    """The config file is not valid JSON; ``line`` and ``column`` locate it."""

    def __init__(self, message, line, column):
        super().__init__(message)
        self.line = line
        self.column = column


class OutputError(RRCollapseError, OSError):
    """An output file could not be written."""
