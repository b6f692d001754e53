"""Exception hierarchy shared by all smsn modules."""


class SmsnError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(SmsnError, ValueError):
    """An argument is outside its admissible domain."""


class DimensionMismatchError(SmsnError, ValueError):
    """Vector/matrix dimensions are inconsistent."""


class NotSPDError(SmsnError, ValueError):
    """A matrix required to be symmetric positive definite is not."""


class MomentUndefinedError(SmsnError, ValueError):
    """A requested moment of the mixing distribution does not exist."""


class DegenerateDirectionError(SmsnError, ValueError):
    """The projection direction leaves no residual scale (half-normal limit)."""


class DegenerateSampleError(SmsnError, ValueError):
    """Sample statistics are undefined (e.g. zero variance)."""


class NoUniqueDirectionError(SmsnError, ValueError):
    """The shape vector vanishes, so every direction has zero skewness."""


class RankDeficientError(SmsnError, ValueError):
    """The sample covariance matrix is singular."""


class QuadratureError(SmsnError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved_error=None):
        super().__init__(message)
        self.achieved_error = achieved_error
