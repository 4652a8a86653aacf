"""Typed error hierarchy.

Errors map onto process exit codes at the CLI boundary:

* bad usage / bad inputs (``ParameterError``, ``ShapeError``, ``DomainError``) -> 2
* no admissible nontrivial phase (``InfeasiblePhaseError``) -> 3
* numerical failure (``ConvergenceError``, ``SingularityError``,
  ``TrajectoryTerminated``) -> 4
"""

from __future__ import annotations


class CycleFieldError(Exception):
    """Base class for all package errors."""


class ParameterError(CycleFieldError):
    """A model parameter or configuration value is invalid."""


class ShapeError(CycleFieldError):
    """An array or path has the wrong shape, length, or grid spacing."""


class DomainError(CycleFieldError):
    """An input is outside the mathematical domain of an operation."""


class InfeasiblePhaseError(CycleFieldError):
    """No admissible nontrivial phase exists for the given parameters.

    Carries a ``reason`` string naming the violated condition.
    """

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class ConvergenceError(CycleFieldError):
    """An iterative solve failed to reach its tolerance.

    Carries the last ``residual`` and the iteration count.
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class SingularityError(CycleFieldError):
    """A closed-form expression hit a vanishing denominator.

    Carries ``factor``, the name of the offending factor.
    """

    def __init__(self, factor: str):
        super().__init__(f"vanishing factor in closed form: {factor}")
        self.factor = factor


class TrajectoryTerminated(CycleFieldError):
    """An ODE trajectory left the admissible region before the horizon.

    Carries the partial path integrated so far.
    """

    def __init__(self, message: str, partial_path=None):
        super().__init__(message)
        self.partial_path = partial_path
