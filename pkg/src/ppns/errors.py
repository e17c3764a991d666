"""Exception types shared across the package."""


class PPNSError(Exception):
    """Base class for all errors raised by ppns."""


class ValidationError(PPNSError, ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    """A dataset line could not be parsed.

    ``lineno`` is 1-based and counts header lines.
    """

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class ConfigurationError(ValidationError):
    """Parameters are individually valid but cannot be used together."""
