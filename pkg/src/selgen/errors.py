"""Exception hierarchy."""


class SelgenError(Exception):
    """Base class for all package errors."""


class ValidationError(SelgenError, ValueError):
    """A record or dataset violates the input contract.

    ``line`` is the 1-based JSONL line number when the error came from a file.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingScoreError(SelgenError, ValueError):
    """An algorithm or selector needs a score field the records do not carry."""


class ConfigurationError(SelgenError, ValueError):
    """Invalid configuration of a simulated world or of a run."""


class UndefinedRiskError(SelgenError, ArithmeticError):
    """The conditional risk is undefined because the selection has zero mass."""
