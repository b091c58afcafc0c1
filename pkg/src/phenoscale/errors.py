"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2.
"""


class PhenoscaleError(Exception):
    pass


class ConfigError(PhenoscaleError, ValueError):
    """Bad configuration: unknown options, inconsistent experiment plans."""


class DataError(PhenoscaleError, ValueError):
    """Bad input data: images, annotations, predictions, manifests."""


class ParseError(DataError):
    """Unparseable content. ``line`` is 1-based when known, else None."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
