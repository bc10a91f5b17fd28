"""Exception types shared across the package."""


class ProjselError(Exception):
    """Base class for all errors raised by projsel."""


class ContractError(ProjselError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateError(ContractError):
    """A column, vector or kernel is degenerate (zero norm, constant, ...).

    Parameters
    ----------
    message : str
    indices : sequence of int, optional
        Offending column indices, when the failure is column-specific.
    """

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = list(indices)


class FormatError(ProjselError, ValueError):
    """Malformed input file."""


class ParseError(FormatError):
    """A text input could not be parsed; ``lineno`` is 1-based."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class TruncatedError(FormatError):
    """A binary payload is shorter than its header announces."""
