"""
Exception hierarchy for the handover lab.

Callers at the CLI boundary map these onto exit codes:
    ConfigError       -> 2
    anything else     -> 1
"""
from typing import Dict, Iterable, Optional, Tuple


class LabError(Exception):
    """Base class for every error raised by the lab."""


class ConfigError(LabError, ValueError):
    """Scenario / plan file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None,
                 column: Optional[int] = None):
        self.path = path
        self.line = line
        self.column = column
        where = ""
        if path:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
                if column is not None:
                    where += f":{column}"
            where += ": "
        super().__init__(f"{where}{message}")


class ConfigValidationError(ConfigError):
    """A named configuration field violates its invariant."""

    def __init__(self, field: str, message: str, path: Optional[str] = None):
        self.field = field
        super().__init__(f"invalid '{field}': {message}", path=path)


class ParamsFormatError(LabError):
    """Parameter file is truncated or not a parameter file at all."""


class ParamsVersionError(ParamsFormatError):
    """Parameter file was written for another schema or feature layout."""

    def __init__(self, message: str, expected: str = "", found: str = ""):
        self.expected = expected
        self.found = found
        super().__init__(message)


class DimensionError(LabError, ValueError):
    """Matrix shapes do not line up (misconfigured feature spec or params)."""


class AggregationError(LabError, ValueError):
    """Reports with different configurations cannot be aggregated."""

    def __init__(self, diff: Dict[str, Tuple[object, object]]):
        self.diff = diff
        keys = ", ".join(f"{k}: {a!r} != {b!r}" for k, (a, b) in sorted(diff.items()))
        super().__init__(f"refusing to aggregate reports with differing config ({keys})")


class OutputDirError(LabError, OSError):
    """Output directory cannot be created or written."""


def first_field(loc: Iterable) -> str:
    """Dotted field name from a pydantic error location tuple."""
    return ".".join(str(part) for part in loc) or "<root>"
