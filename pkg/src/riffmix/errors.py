"""Shared exception types."""

from __future__ import annotations


class RiffmixError(Exception):
    """Base class for library-specific failures."""


class DeckParseError(RiffmixError, ValueError):
    """Raised when a deck expression does not match the grammar.

    Carries the offset of the offending character in `position`.
    """

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class SignatureMismatchError(RiffmixError, ValueError):
    """Two decks do not share a label-count signature."""


class CapExceededError(RiffmixError, RuntimeError):
    """A configurable work or size cap would be exceeded."""


class DegenerateDistributionError(RiffmixError, ValueError):
    """The descent count is deterministic (variance zero); a point mass
    should be used instead of a normal curve."""


class InconsistentProbabilitiesError(RiffmixError, ValueError):
    """Probability inversion produced a negative or non-integer coefficient."""
