"""Exception hierarchy shared by every module."""

from __future__ import annotations

from enum import Enum


class Status(str, Enum):
    """Outcome of a rigorous check."""

    CERTIFIED = "certified"
    FALSIFIED = "falsified"
    INCONCLUSIVE = "inconclusive"


class HorseshoeError(Exception):
    """Base class for all library errors."""


class ConstructionError(HorseshoeError, ValueError):
    """Invalid arguments when building an interval, box or map."""


class DegenerateBox(HorseshoeError, ValueError):
    """Operation needs positive width but the box is a point along that axis."""


class DimMismatch(HorseshoeError, ValueError):
    """Operands live in spaces of different dimension."""


class DomainError(HorseshoeError, ValueError):
    """Input lies outside the domain of a map."""


class StripStraddle(DomainError):
    """A box meets more than one strip of a piecewise map in strict mode."""


class BudgetExceeded(HorseshoeError, RuntimeError):
    """A search ran out of budget. ``partial`` holds what was found so far."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class HypothesisFailed(HorseshoeError, ValueError):
    """Preconditions of a theorem could not be certified."""


class NotASlab(HorseshoeError, ValueError):
    """A rectangle is not a slab of another in the required sense."""


class NotPhaseForm(HorseshoeError, ValueError):
    """The map component is not of the form a0 + c*cos(2*pi*L(x))."""


class EmptyWord(HorseshoeError, ValueError):
    pass


class AlphabetMismatch(HorseshoeError, ValueError):
    pass


class NotDisjoint(HorseshoeError, ValueError):
    pass


class PrerequisiteFailed(HorseshoeError, ValueError):
    """A prerequisite certificate could not be obtained."""


class SetsIntersect(HorseshoeError, ValueError):
    pass


class EmptySet(HorseshoeError, ValueError):
    pass


class PreconditionFailed(HorseshoeError, ValueError):
    pass


class ExpressionError(HorseshoeError, ValueError):
    """Syntax error in a custom expression. ``pos`` is a 0-based column."""

    def __init__(self, message: str, pos: int | None = None):
        if pos is not None:
            message = f"{message} (column {pos + 1})"
        super().__init__(message)
        self.pos = pos


class ConfigError(HorseshoeError, ValueError):
    """Bad configuration. ``key`` names the offending entry when known."""

    def __init__(self, message: str, key: str | None = None):
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key
