"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class EvaluationError(RuntimeError):
    """A numerical input is inconsistent (e.g. nonpositive variance on an
    interval where the path is strictly interior), which signals a broken
    upstream computation rather than bad user input."""


class NumericalError(RuntimeError):
    """An iterative numerical procedure (quadrature, root find) failed to
    converge."""


class InfeasibleError(ValueError):
    """A transport problem admits no martingale coupling (marginals not in
    convex order on the grid)."""


class InsufficientDataError(ValueError):
    """Not enough Monte-Carlo paths for the requested statistic."""
