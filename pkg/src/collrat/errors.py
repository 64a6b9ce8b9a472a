"""Exception hierarchy shared across the package.

The CLI maps each class to a distinct process exit code, so library code
should raise the most specific one that applies.
"""

from __future__ import annotations


class CollratError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ArgumentError(CollratError, ValueError):
    """Invalid argument or precondition violation (exit code 1)."""

    exit_code = 1


class DataError(CollratError):
    """Malformed or inconsistent input data (exit code 2)."""

    exit_code = 2


class ResourceLimitError(CollratError):
    """A configured enumeration/size cap would be exceeded (exit code 3)."""

    exit_code = 3


class SolverError(CollratError):
    """Numerical failure in an LP/QP routine (exit code 4)."""

    exit_code = 4
