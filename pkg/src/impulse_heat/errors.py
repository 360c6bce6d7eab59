"""Exception hierarchy shared by the solvers and the CLI."""


class ImpulseHeatError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ImpulseHeatError, ValueError):
    """Invalid domain, basis, schedule or problem data."""


class DegenerateProblemError(ConfigurationError):
    """The initial state already lies in the target ball."""


class TrivialProblemError(ConfigurationError):
    """Free decay reaches the target no later than the first impulse."""


class DomainError(ImpulseHeatError, ValueError):
    """An argument lies outside the admissible range of an operation."""


class UsageError(ImpulseHeatError, ValueError):
    """Inconsistent call, e.g. mismatched dimensions or a bad bracket."""


class InfeasibleError(DomainError):
    """No control of any size steers the state into the target (N* = +inf)."""


class DegenerateAdjointError(ImpulseHeatError, ArithmeticError):
    """The adjoint direction is annihilated by an active control region.

    At the truncated level this means the mode count is too small to
    resolve the region; raise ``mode_count`` rather than regularize.
    """


class ConvergenceError(ImpulseHeatError, RuntimeError):
    """The dual ascent failed to produce a certified optimum.

    ``lower`` is the best dual value found, ``upper`` the smallest
    verified feasible control bound (``inf`` if none was found).
    """

    def __init__(self, message, lower=float("-inf"), upper=float("inf")):
        super().__init__(f"{message} (bounds: [{lower!r}, {upper!r}])")
        self.lower = lower
        self.upper = upper


class ConsistencyError(ImpulseHeatError, RuntimeError):
    """Computed quantities violate an ordering they must satisfy."""


class OracleRefusal(ImpulseHeatError, ValueError):
    """Instance too large for brute-force enumeration."""
