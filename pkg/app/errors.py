"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations

from typing import Optional


class SgdpError(Exception):
    """Root of all errors raised by this package."""


class PartitionDomainError(SgdpError, ValueError):
    """Partition parameters or configuration outside the supported domain."""


class DataValidationError(SgdpError, ValueError):
    """Input data violates a dataset invariant (gaps, bad tags, asymmetric adjacency)."""


class ConfigError(SgdpError, ValueError):
    """A run file failed schema validation."""


class NumericError(SgdpError, ArithmeticError):
    """Factorization failed or a numeric kernel produced a non-finite value."""

    def __init__(self, message: str, sweep: Optional[int] = None):
        self.sweep = sweep
        if sweep is not None:
            message = f"{message} (sweep {sweep})"
        super().__init__(message)

    def at_sweep(self, sweep: int) -> "NumericError":
        """Return a copy tagged with the sweep index where it surfaced."""
        if self.sweep is not None:
            return self
        return NumericError(str(self), sweep=sweep)
