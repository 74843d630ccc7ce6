"""Shared exception types for the workbench."""


class ParityError(ValueError):
    """Raised when n * degree is odd and no regular graph can exist."""


class DegreeError(ValueError):
    """Raised when the requested degree is out of range for the node count."""


class RejectSignal(RuntimeError):
    """Raised when no proper edge coloring with `degree` colors was found.

    Callers are expected to resample the graph and try again.
    """


class ParseError(ValueError):
    """Raised on malformed serialized circuits or graphs."""


class CapacityError(RuntimeError):
    """Raised when a dense simulation or contraction would exceed memory caps."""


class FitError(RuntimeError):
    """Raised when a curve fit fails to converge or is degenerate."""


class DomainError(ValueError):
    """Raised when a numeric argument is outside its mathematical domain."""


class InfeasibleBudget(RuntimeError):
    """Raised when slicing cannot reach the requested width budget."""


class EmptySamples(ValueError):
    """Raised when an estimator receives an empty sample list."""


class EmptyTable(ValueError):
    """Raised when a shot table contains no records."""
