"""Exception types shared across the package."""


class CrosslayerError(Exception):
    """Base class for all package-specific errors."""


class ParseError(CrosslayerError):
    """A malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class DomainError(CrosslayerError):
    """An input value outside its allowed domain (bad probability, bad id, ...)."""


class InvalidLedgerError(CrosslayerError):
    """An overhead term touched an unreachable (infinite-distance) node pair."""


class InternalError(CrosslayerError):
    """An invariant the package maintains internally was violated."""
