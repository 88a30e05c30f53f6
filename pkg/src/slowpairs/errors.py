"""Exception types raised across the package."""


class SlowPairsError(Exception):
    """Base class for all package errors."""


class ValidityError(SlowPairsError, ValueError):
    """A model is evaluated outside the regime where it applies."""


class UndefinedCARError(SlowPairsError, ZeroDivisionError):
    """CAR has a vanishing denominator (no accidentals)."""


class FitError(SlowPairsError, ValueError):
    """Weighted least-squares problem is degenerate."""


class ConfigError(SlowPairsError):
    """Configuration file cannot be parsed or violates a model invariant."""

    def __init__(self, message, path=None, line=None):
        self.message = message
        self.path = path
        self.line = line
        super().__init__(str(self))

    def __str__(self):
        where = ""
        if self.path is not None:
            where = str(self.path)
            if self.line is not None:
                where += f":{self.line}"
            where += ": "
        return where + self.message
