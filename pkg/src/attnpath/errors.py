"""Exception types shared across the package."""


class AttnpathError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AttnpathError):
    """A line-oriented input file is malformed.

    Carries the 1-based line number when one is known.
    """

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ValidationError(AttnpathError):
    """Structurally parseable input violates a domain invariant."""
