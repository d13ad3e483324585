"""Exception types raised by koethelab."""


class KoetheError(Exception):
    """Base class for all koethelab errors."""


class InvalidMatrixError(KoetheError, ValueError):
    """Weight grid with nonpositive, nonfinite or overflowing entries."""


class NotRegularError(KoetheError, ValueError):
    """Consecutive grade ratios are not nonincreasing in n."""


class InsufficientGradesError(KoetheError, ValueError):
    pass


class GradeIndexError(KoetheError, IndexError):
    pass


class DimensionError(KoetheError, ValueError):
    pass


class DegenerateOperatorError(KoetheError, ValueError):
    """The operator is zero, so its range is trivial."""


class EmptyRangeError(KoetheError, ValueError):
    pass


class IllConditionedSpanError(KoetheError, ValueError):
    pass


class ContractionError(KoetheError, ValueError):
    """The cone operator is not a 1/2-contraction; T was not rescaled."""


class ConfigError(KoetheError, ValueError):
    pass
