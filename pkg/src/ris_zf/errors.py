"""Exception types raised by the solver modules."""


class RisZfError(Exception):
    """Base class for all package errors."""


class DimensionError(RisZfError, ValueError):
    """Matrix shapes are incompatible with the requested operation."""


class DomainError(RisZfError, ValueError):
    """An argument lies outside the domain of the operation."""


class RankError(RisZfError, ValueError):
    """A matrix that must have full rank does not."""


class DegenerateError(RisZfError):
    """A numerically degenerate allocation or direction was encountered.

    Callers treat this as a rejection of the current allocation candidate.
    """


class SelectionError(RisZfError):
    """No candidate user yields a finite allocation metric."""


class ConfigError(RisZfError, ValueError):
    """Invalid scenario or sweep configuration."""
