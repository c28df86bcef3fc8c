"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ToolkitError):
    """Input bytes could not be decoded into the expected format.

    Carries the line number or byte offset of the offending content when known.
    """

    def __init__(self, message, line=None, offset=None):
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if offset is not None:
            parts.append(f"byte offset {offset}")
        if parts:
            message = f"{message} ({', '.join(parts)})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class ValidationError(ToolkitError):
    """Well-formed input violated a domain invariant."""
