"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class MetaModelError(Exception):
    """Base class for all package errors."""


class ConfigError(MetaModelError):
    """Invalid configuration, flags, or config-file contents."""


class DataError(MetaModelError):
    """Malformed, inconsistent, or insufficient input data."""


class NumericError(MetaModelError):
    """Numerical failure (singular systems, exhausted jitter, etc.)."""
