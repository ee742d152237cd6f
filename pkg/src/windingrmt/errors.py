"""Exception types shared across the package."""


class WindingError(Exception):
    """Base class for numerical failures in this package."""


class IllConditionedError(WindingError):
    """A matrix that must be inverted has a condition estimate above threshold.

    Callers are expected to resample and count the rejection.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SingularFieldError(WindingError):
    """The field matrix is singular at the requested parameter (gap closing)."""


class ContourRefinementError(WindingError):
    """Adaptive phase tracking exceeded its refinement budget."""


class EigenConvergenceError(WindingError):
    """The dense eigenvalue solver did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CoincidentPointsError(ValueError):
    """Correlator evaluated at parameter points that coincide modulo pi."""
