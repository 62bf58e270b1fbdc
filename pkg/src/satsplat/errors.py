"""Error taxonomy shared by the library and the command line.

The CLI maps these to distinct exit codes, so raising the right class is
part of the public behavior: bad knobs and impossible requests are
ConfigError, broken or missing inputs are DataError, and a diverged or
degenerate computation is NumericalError.
"""


class ConfigError(ValueError):
    """The requested configuration cannot be run."""


class DataError(ValueError):
    """An input dataset or file is missing, malformed, or inconsistent."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite or degenerate results."""
