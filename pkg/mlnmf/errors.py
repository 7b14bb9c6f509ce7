#!/usr/bin/env python3

"""Exception hierarchy for mlnmf.

Library code raises these and lets them propagate; only the CLI converts them
into a message and an exit code (see `exit_code_for`).
"""

from typing import Optional

__all__ = [
    "MlnmfError",
    "InvalidArgumentError",
    "CannotCoarsenError",
    "UnsupportedOperationError",
    "DataError",
    "ParseError",
    "InconsistentDatasetError",
    "NonnegativityError",
    "NumericalError",
    "CapExceededError",
    "UndefinedSmoothnessError",
    "EXIT_OK",
    "EXIT_INVALID_ARGUMENTS",
    "EXIT_DATA_ERROR",
    "EXIT_NUMERICAL_FAILURE",
    "exit_code_for",
]

EXIT_OK = 0
EXIT_INVALID_ARGUMENTS = 2
EXIT_DATA_ERROR = 3
EXIT_NUMERICAL_FAILURE = 4


class MlnmfError(Exception):
    """Base class for every error raised by mlnmf."""


class InvalidArgumentError(MlnmfError, ValueError):
    """Dimension mismatch, out-of-range rank, malformed budget and the like."""


class CannotCoarsenError(InvalidArgumentError):
    """A grid is too small to be coarsened the requested number of times."""


class UnsupportedOperationError(InvalidArgumentError):
    """The operation needs grid metadata that the dataset does not have."""


class DataError(MlnmfError):
    """Base class for problems with input data."""


class ParseError(DataError):
    """Malformed input file.

    Args:
        message: What went wrong
        path: The file being parsed
        offset: Byte offset for binary formats, or None
        row: 1-based row for text formats, or None
        col: 1-based column for text formats, or None
    """

    def __init__(
        self,
        message: str,
        path: str,
        offset: Optional[int] = None,
        row: Optional[int] = None,
        col: Optional[int] = None,
    ) -> None:
        location = ""
        if offset is not None:
            location = f" at byte offset {offset}"
        elif row is not None:
            location = f" at row {row}" + (f" col {col}" if col is not None else "")
        super().__init__(f"{path}{location}: {message}")
        self.path = path
        self.offset = offset
        self.row = row
        self.col = col


class InconsistentDatasetError(DataError):
    """Images of different sizes in one directory, or no images at all."""


class NonnegativityError(DataError):
    """A negative (or non-finite) entry where a nonnegative matrix is required."""

    def __init__(self, message: str, row: int, col: int) -> None:
        super().__init__(f"{message} at row {row} col {col}")
        self.row = row
        self.col = col


class NumericalError(MlnmfError):
    """Base class for numerical failures."""


class CapExceededError(NumericalError):
    """The active-set NNLS solver hit its exchange cap."""


class UndefinedSmoothnessError(NumericalError):
    """Smoothness of a zero matrix is undefined."""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code.

    Args:
        exc: The exception that reached the CLI boundary

    Returns:
        2 for invalid arguments, 3 for data errors, 4 for numerical failures
    """
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL_FAILURE
    if isinstance(exc, (DataError, OSError)):
        return EXIT_DATA_ERROR
    if isinstance(exc, (InvalidArgumentError, ValueError)):
        return EXIT_INVALID_ARGUMENTS
    return 1
