class CpinnError(Exception):
    """Base class of every error raised by the solver suite."""


class ShapeError(CpinnError, ValueError):
    """A width list, point array or cotangent has the wrong shape."""


class ConfigError(CpinnError, ValueError):
    """An experiment or solver configuration is invalid."""


class ProblemError(CpinnError, ValueError):
    """A problem cannot be built or looked up."""


class OptimizerError(CpinnError, ArithmeticError):
    """A loss or gradient became non-finite.

    `iteration` is the optimizer step at which it happened."""

    def __init__(self, message, iteration=None):
        super().__init__(message if iteration is None else f"{message} (iteration {iteration})")
        self.iteration = iteration


class SolverDiverged(CpinnError):
    """A solver aborted after an optimizer failure.

    `nets` holds the last networks whose loss was finite, keyed by field
    name, and `report` the partial report built from them."""

    def __init__(self, message, iteration, nets, report=None):
        super().__init__(message)
        self.iteration = iteration
        self.nets = nets
        self.report = report


class MetricError(CpinnError, ZeroDivisionError):
    """A relative error has a vanishing reference field."""
