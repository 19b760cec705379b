"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, CxtError and other
I/O failures -> 2, NumericError -> 3.
"""


class ConfigError(Exception):
    """Invalid configuration, arguments, or input validation failure."""


class CxtError(Exception):
    """Malformed or truncated CXT file."""


class NumericError(Exception):
    """Numerical failure (singular solve, non-finite values)."""
