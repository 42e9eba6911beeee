"""
Exception hierarchy for the Boundary Forest library.

Every error subclasses both BoundaryForestError and the builtin that callers
would naturally expect (ValueError for bad input, RuntimeError for bad state).
"""

from pathlib import Path
from typing import Optional, Union


class BoundaryForestError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(BoundaryForestError, ValueError):
    """Two vectors that must share a length do not."""

    def __init__(self, expected: int, actual: int, what: str = "vector"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} has dimension {actual}, expected {expected}")


class InvalidValueError(BoundaryForestError, ValueError):
    """A value is NaN, infinite, or outside its allowed range."""


class ForestStateError(BoundaryForestError, RuntimeError):
    """An operation was called in a state that does not allow it."""


class ConfigurationError(BoundaryForestError, ValueError):
    """Configuration or command-line parameters are invalid or conflicting."""


class DatasetFormatError(BoundaryForestError, ValueError):
    """A dataset file could not be parsed."""

    def __init__(self, message: str, path: Optional[Union[str, Path]] = None,
                 line_number: Optional[int] = None):
        self.path = str(path) if path is not None else None
        self.line_number = line_number
        location = ""
        if self.path is not None:
            location = self.path
            if line_number is not None:
                location += f":{line_number}"
            location += ": "
        elif line_number is not None:
            location = f"line {line_number}: "
        super().__init__(f"{location}{message}")
