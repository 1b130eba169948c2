"""Exception types shared across the package."""


class SoestimError(Exception):
    """Base class for package-specific errors."""


class DimensionMismatch(SoestimError, ValueError):
    """Operands have incompatible shapes for the requested operation."""


class ZeroColumnError(SoestimError, ValueError):
    """A matrix contains a column that is exactly zero."""


class BudgetExceededError(SoestimError, RuntimeError):
    """A combinatorial search exceeded its work budget."""


class ConvergenceError(SoestimError, RuntimeError):
    """An iterative numerical routine failed to converge."""


class RankDeficientError(SoestimError, RuntimeError):
    """A least-squares subproblem became rank deficient."""


class InfeasibleError(SoestimError, ValueError):
    """The requested configuration admits no valid solution."""


class ConfigError(SoestimError, ValueError):
    """A configuration file or parameter set is invalid."""
