"""
Exception hierarchy for the PSLF engine.

The command-line front door maps these onto exit codes:
- ConfigError -> 1
- RatingsFormatError, SnapshotError -> 2
DivergenceError never reaches the user; the trainer turns it into a
diverged flag and an infinite fitness.
"""

from typing import Optional


class PSLFError(Exception):
    """Base class for all engine errors."""


class ConfigError(PSLFError, ValueError):
    """Invalid configuration value, unknown key or bad command-line usage."""


class RatingsFormatError(PSLFError, ValueError):
    """Malformed ratings input."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class SnapshotError(PSLFError, ValueError):
    """Unreadable or inconsistent factor snapshot."""


class DivergenceError(PSLFError, ArithmeticError):
    """A kernel or the CG recurrence produced a non-finite value."""
