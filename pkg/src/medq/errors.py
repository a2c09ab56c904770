"""Exception types shared across the package."""

from __future__ import annotations


class MedqError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(MedqError, ValueError):
    """An argument value violates a documented precondition."""


class UnsupportedConfigError(MedqError, ValueError):
    """A structurally valid configuration falls outside supported limits."""


class QubitIndexError(MedqError, IndexError):
    """A qubit index is outside the register."""


class CsvFormatError(MedqError, ValueError):
    """A dataset file does not match the expected CSV layout.

    Carries the 1-based line number of the first offending row when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(MedqError, ArithmeticError):
    """A numerical routine failed to produce a usable result."""


class TrainingDivergedError(MedqError, ArithmeticError):
    """Loss became non-finite during optimization.

    Carries the epoch at which divergence was detected and a snapshot of
    the parameters at that point.
    """

    def __init__(self, epoch: int, params=None):
        super().__init__(f"loss became non-finite at epoch {epoch}")
        self.epoch = epoch
        self.params = params
