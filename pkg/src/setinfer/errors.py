"""Exception types shared across the package."""


class SetinferError(Exception):
    """Base class for errors raised by this package."""


class ShapeError(SetinferError):
    """Operand shapes do not conform; message names both shapes."""


class GradientError(SetinferError):
    """Backward pass misuse or a non-finite gradient."""


class NumericsError(SetinferError):
    """A numerical invariant failed at runtime (e.g. weights off simplex)."""


class TextError(SetinferError):
    """Text encoding failure (empty input, bad external response)."""


class TransportError(TextError):
    """External embedding endpoint unreachable."""


class DataError(SetinferError):
    """Malformed dataset, feature spec, or value."""


class CheckpointError(SetinferError):
    """Unreadable checkpoint or config digest mismatch."""


class SessionError(SetinferError):
    """Acquisition session misuse (unknown feature, exhausted budget)."""
