"""
Error hierarchy for annulus-nls.

ParameterError maps to CLI exit code 4, SolverError to exit code 3.
"""
from typing import Any, Optional


class AnnulusNLSError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(AnnulusNLSError, ValueError):
    """Invalid (N, p, lambda), mesh, bracket or run configuration."""


class InsufficientRangeError(ParameterError):
    """A curve or profile ladder does not span the range an operation needs."""


class SolverError(AnnulusNLSError, RuntimeError):
    """A numerical kernel failed to produce an acceptable answer."""


class StepSizeUnderflowError(SolverError):
    """Adaptive step size fell below the representable minimum."""

    def __init__(self, message: str, radius: float):
        super().__init__(message)
        self.radius = radius


class SingularMatrixError(SolverError):
    """Zero or near-zero pivot in a tridiagonal solve."""


class BracketError(SolverError):
    """No sign change could be established for a root search."""


class ShootingMonotonicityError(SolverError):
    """The first-zero radius increased with the initial slope."""


class NewtonConvergenceError(SolverError):
    """Damped Newton did not reach the residual acceptance level."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ProfileValidationError(SolverError):
    """A converged mesh function is not a positive unimodal ground state."""


class ContinuationError(SolverError):
    """Continuation step underflow; carries the last converged lambda."""

    def __init__(self, message: str, last_lambda: float, last_profile: Any = None):
        super().__init__(message)
        self.last_lambda = last_lambda
        self.last_profile = last_profile


class DegenerateLinearizationError(SolverError):
    """The linearized operator at a ground state is singular."""


class InnerIterationError(SolverError):
    """The Crank-Nicolson fixed-point iteration did not converge."""

    def __init__(self, message: str, time: float, partial: Optional[Any] = None):
        super().__init__(message)
        self.time = time
        self.partial = partial


class EvolutionAbortedError(SolverError):
    """Evolution gave up after halving dt; carries the partial trace."""

    def __init__(self, message: str, trace: Any):
        super().__init__(message)
        self.trace = trace
