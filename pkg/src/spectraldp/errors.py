"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-domain input (non-finite entries, bad ranks, ...)."""


class RankError(InputError):
    """Requested rank exceeds the numerical rank of the matrix."""


class InfeasibleError(RuntimeError):
    """Conditioning constraints made the moment program infeasible."""


class SolverError(RuntimeError):
    """Numerical solver failed to reach its target tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}
