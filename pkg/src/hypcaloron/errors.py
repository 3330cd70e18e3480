"""Exception hierarchy shared by all modules."""


class CaloronError(Exception):
    """Base class for every error raised by this package."""

    code = "error"


class ValidationError(CaloronError, ValueError):
    code = "validation"


class DomainError(CaloronError, ValueError):
    """Argument outside the mathematical domain of a function."""

    code = "domain"


class SingularPointError(DomainError):
    """Evaluation at a point where the quantity is singular (axis, vortex)."""

    code = "singular_point"


class IterativeFailure(CaloronError, RuntimeError):
    """A nonlinear iteration failed to converge."""

    code = "iterative_failure"

    def __init__(self, message, last_residual=float("nan"), iterations=0):
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations


class LinearSolverError(IterativeFailure):
    """Conjugate gradients stagnated; ``trace`` holds the residual history."""

    code = "linear_solver"

    def __init__(self, message, last_residual=float("nan"), iterations=0, trace=()):
        super().__init__(message, last_residual, iterations)
        self.trace = list(trace)


class InternalConsistencyError(CaloronError, RuntimeError):
    code = "internal_consistency"


class TruncationError(CaloronError, RuntimeError):
    """The truncated domain is too short for the far-field plateau to form."""

    code = "truncation"
