"""Exception types shared across the toolchain."""


class EnginespaceError(Exception):
    """Base class for all toolchain errors."""


class ParseError(EnginespaceError):
    """Malformed surface syntax, with a 1-based source position."""

    def __init__(self, message, line=None, col=None, expected=None):
        self.line = line
        self.col = col
        self.expected = expected
        loc = f"line {line}, col {col}: " if line is not None else ""
        exp = f" (expected {expected})" if expected is not None else ""
        super().__init__(f"{loc}{message}{exp}")


class UnknownOpError(ParseError):
    """Operator name outside the closed operator set."""


class UnboundNameError(ParseError):
    """Reference to a name that was never declared."""


class DuplicateNameError(ParseError):
    """A name declared twice."""


class ShapeError(EnginespaceError):
    """Base class for shape-level failures."""


class RankError(ShapeError):
    pass


class ShapeMismatchError(ShapeError):
    pass


class ParamShapeMismatchError(ShapeError):
    """Engine parameters disagree with the shapes they must describe."""


class DivisibilityError(ShapeError):
    """A split factor does not evenly divide the extent it partitions."""

    def __init__(self, axis, factor, extent):
        self.axis = axis
        self.factor = factor
        self.extent = extent
        super().__init__(f"factor {factor} does not divide extent {extent} on axis {axis}")


class InvalidScheduleError(ShapeError):
    """Structurally ill-formed schedule (e.g. a loop over a non-kernel term,
    or an engine fed by another engine without a buffer in between)."""


class UnboundInputError(EnginespaceError):
    """A term references an input name missing from the environment."""


class AnalysisConflictError(EnginespaceError):
    """Two e-classes with different shapes were merged: an unsound rewrite."""


class EmptyClassError(EnginespaceError):
    """An e-class represents no term within the requested depth."""
