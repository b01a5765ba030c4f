"""Exception types raised across the package."""


class CuboidError(ValueError):
    """Base class for all package errors."""


class NonPositiveDepth(CuboidError):
    pass


class DegenerateBox(CuboidError):
    pass


class IdenticalInputs(CuboidError):
    pass


class DegenerateEdge(CuboidError):
    pass


class SingularSystem(CuboidError):
    pass


class LengthMismatch(CuboidError):
    pass


class ShapeMismatch(CuboidError):
    pass


class BadDimensions(CuboidError):
    pass


class EmptyRoi(CuboidError):
    pass


class EmptyDataset(CuboidError):
    pass


class CountMismatch(CuboidError):
    pass


class RetryExhausted(CuboidError):
    pass


class ParseError(CuboidError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingImageFile(CuboidError):
    pass


class ChecksumError(CuboidError):
    """Checkpoint payload does not match its header."""
