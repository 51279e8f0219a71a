class RidepoolError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(RidepoolError, ValueError):
    """A malformed row in an input file.

    ``row`` is the 1-based line number in the file (the header is line 1).
    """

    def __init__(self, path, row, message):
        self.path = str(path)
        self.row = row
        super().__init__(f"{self.path}:{row}: {message}")


class ValidationError(RidepoolError, ValueError):
    """Input parsed fine but violates a structural invariant."""


class ConfigError(RidepoolError, ValueError):
    """Invalid or incomplete run configuration."""
