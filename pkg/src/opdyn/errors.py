"""Exception types shared across the package.

The CLI maps these onto exit codes: input/validation problems exit 1,
OS-level IO failures exit 2, verification failures exit 3.
"""

from __future__ import annotations


class ParseError(ValueError):
    """Malformed input data (edge lists, CSV files)."""


class ValidityError(ValueError):
    """A value or parameter violates a documented constraint."""


class ConfigError(ValueError):
    """A scenario/sweep config file is missing keys or holds bad values."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ConsistencyError(RuntimeError):
    """Two internally computed quantities disagree beyond tolerance."""
