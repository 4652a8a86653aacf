"""Field-theoretic business-cycle toolkit.

Statistical weights over agent paths, saddle-point phase structure,
analytic transition kernels, first-order interaction corrections, and a
Langevin Monte Carlo oracle, with a CLI front end.
"""

from cyclefield.errors import (
    ConvergenceError,
    CycleFieldError,
    DomainError,
    InfeasiblePhaseError,
    ParameterError,
    ShapeError,
    SingularityError,
    TrajectoryTerminated,
)
from cyclefield.params import ModelParams, load_config
from cyclefield.paths import AgentPath, AgentState

__all__ = [
    "AgentPath",
    "AgentState",
    "ConvergenceError",
    "CycleFieldError",
    "DomainError",
    "InfeasiblePhaseError",
    "ModelParams",
    "ParameterError",
    "ShapeError",
    "SingularityError",
    "TrajectoryTerminated",
    "load_config",
]

__version__ = "0.1.0"
