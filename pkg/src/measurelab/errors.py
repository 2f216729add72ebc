"""Exception hierarchy shared by every module."""


class MeasureLabError(Exception):
    """Base class for all library errors."""


class InvalidInputError(MeasureLabError, ValueError):
    """An argument violates a type invariant (radius, trace, positivity, range)."""


class DimensionMismatchError(MeasureLabError, ValueError):
    """Operands live in Hilbert spaces of different dimension."""


class UnsupportedDimensionError(MeasureLabError, ValueError):
    """A qubit-only operation received a non-qubit operand."""


class InvalidProbabilityError(MeasureLabError, ValueError):
    """A computed probability left [0, 1] by more than the clamping tolerance."""


class UndefinedPostStateError(MeasureLabError, ValueError):
    """The post-measurement state was requested for a zero-probability outcome."""


class InvalidComparisonError(MeasureLabError, ValueError):
    """Two ensembles were compared whose average states differ."""
