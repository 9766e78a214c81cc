"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all latrescore errors."""


class LatticeError(ToolkitError):
    """A lattice violates a structural invariant."""


class FormatError(ToolkitError):
    """A file could not be parsed.

    `line` is the 1-based line number when one can be attributed.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SessionError(ToolkitError):
    """A session manifest is missing, empty, or references bad entries."""


class ScorerError(ToolkitError):
    """A sequence scorer could not be built or queried."""


class ProtocolError(ScorerError):
    """The external scorer connection failed or answered out of grammar."""
