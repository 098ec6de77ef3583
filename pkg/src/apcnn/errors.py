"""Exception types shared across the package."""


class ApcnnError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(ApcnnError, ValueError):
    """An argument violates a documented precondition."""


class ShapeError(InvalidArgumentError):
    """Array shapes are inconsistent with the requested operation."""


class InsufficientFramesError(InvalidArgumentError):
    """A frame sequence is too short for the requested operation."""


class InvalidStateError(ApcnnError, RuntimeError):
    """An operation was invoked in a mode or state it does not support."""


class FormatError(ApcnnError):
    """A file does not conform to its expected on-disk format."""
