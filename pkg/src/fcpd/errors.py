"""Exception hierarchy shared by every fcpd module."""

from __future__ import annotations


class FcpdError(Exception):
    """Base class for all errors raised by fcpd."""


class FormatError(FcpdError, ValueError):
    """Input file is malformed (ragged rows, unparseable fields, bad JSON)."""


class DataError(FcpdError, ValueError):
    """Data violate a precondition: non-finite values, too few curves, shape mismatch."""


class ConfigError(FcpdError, ValueError):
    """A configuration value lies outside its admissible range."""


class DomainError(FcpdError, IndexError):
    """Index arguments fall outside the admissible window."""


class DegenerateError(FcpdError, ArithmeticError):
    """The requested quantity is undefined for the given data (zero variance, zero shift)."""

    def __init__(self, message: str, **partial: object) -> None:
        super().__init__(message)
        # quantities that were still computable before the degeneracy was hit
        self.partial = dict(partial)
