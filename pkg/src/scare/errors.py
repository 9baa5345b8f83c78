"""Exception and warning classes raised by the solvers and oracles."""


class ScareError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ScareError, ValueError):
    pass


class InvalidProblem(ScareError, ValueError):
    """The coefficient data violate a structural requirement (R > 0, ...)."""


class SingularWeight(ScareError):
    """``R + Pi22(X)`` is numerically singular."""


class SingularPivot(ScareError):
    """The doubling initialization matrix could not be inverted."""


class SingularShift(ScareError):
    """A shifted matrix ``M - gamma*I`` is numerically singular."""


class SingularInnerSystem(ScareError):
    pass


class SingularL(ScareError):
    """The vectorized Lyapunov operator is singular."""


class LossOfPsd(ScareError):
    pass


class NotHurwitz(ScareError):
    pass


class NoPsdRoot(ScareError):
    pass


class OracleSizeError(ScareError, ValueError):
    """Problem exceeds the hard size cap of a dense oracle."""


class NotConverged(ScareError):
    """Iteration cap reached.

    ``report`` holds the partial :class:`~scare.solvers.SolveReport` when the
    failure happened inside one of the SCARE solvers.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InnerStalled(NotConverged):
    pass


class Diverged(NotConverged):
    """An iterate or its normalized residual became non-finite."""


class DegenerateDenominatorWarning(UserWarning):
    pass


class RankDeficiencyWarning(UserWarning):
    pass
