"""Exception and warning types shared across the package."""


class SumTailsError(Exception):
    """Base class for all errors raised by :mod:`sumtails`."""


class DivergentVariance(SumTailsError):
    """The term distribution has no finite variance (power family, l = 1)."""


class NonRealCharFunction(SumTailsError):
    """The power-family pole sum produced a non-negligible imaginary part."""


class QuadratureFailure(SumTailsError):
    """The inversion integral did not reach the requested tolerance.

    Attributes
    ----------
    error_estimate : float
        Error estimate achieved before giving up.
    z : float or None
        Evaluation point, filled in by batch callers.
    """

    def __init__(self, message, error_estimate=float("nan"), z=None):
        super().__init__(message)
        self.error_estimate = error_estimate
        self.z = z


class NoCrossover(SumTailsError):
    """The crossover bracket contains no sign change."""


class PrecisionGuard(SumTailsError):
    """Requested evaluation is outside the range where the oracle is exact."""


class GridTooNarrow(SumTailsError):
    """Probability mass escaping the convolution grid exceeds the budget."""


class ConvergenceWarning(UserWarning):
    """A truncated series was cut while its terms were still growing."""
