from __future__ import annotations


class RhlabError(Exception):
    pass


class ParamsError(RhlabError, ValueError):
    pass


class ConfigError(ParamsError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PreconditionError(RhlabError, ValueError):
    pass


class ResourceError(RhlabError, MemoryError):
    pass


class MarginError(RhlabError, ArithmeticError):
    pass


class AliasingError(RhlabError, ArithmeticError):
    pass


class FitError(RhlabError, ArithmeticError):
    pass


class NotMeanFreeError(RhlabError, ValueError):
    pass


class ConsistencyError(RhlabError, AssertionError):
    """An internal invariant failed. This is a bug, not a data condition."""


class ReportError(RhlabError, FileNotFoundError):
    pass
