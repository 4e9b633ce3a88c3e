"""Semi-open queueing networks with backordering, solved through a lost-customers twin."""
from .analysis import PerformanceReport, analyze
from .errors import (
    ModelError,
    NoConvergence,
    NonPositiveRate,
    NonStochasticRow,
    NotConstantRate,
    Reducible,
    SingularSystem,
    SoqnError,
    StateSpaceTooLarge,
    UnknownNode,
    Unstable,
    UnsupportedN,
)
from .netmodel import FCFS, PS, Node, RateFunction, SoqnModel, solve_traffic, validate_model
from .rmfs import RmfsParams, build_rmfs_model, minimal_robots, stable_robots_set
from .soqn import adjust_lambda_lc, is_stable, lambda_bo_max, lambda_eff

__all__ = [
    "FCFS",
    "PS",
    "ModelError",
    "NoConvergence",
    "Node",
    "NonPositiveRate",
    "NonStochasticRow",
    "NotConstantRate",
    "PerformanceReport",
    "RateFunction",
    "Reducible",
    "RmfsParams",
    "SingularSystem",
    "SoqnError",
    "SoqnModel",
    "StateSpaceTooLarge",
    "UnknownNode",
    "Unstable",
    "UnsupportedN",
    "adjust_lambda_lc",
    "analyze",
    "build_rmfs_model",
    "is_stable",
    "lambda_bo_max",
    "lambda_eff",
    "minimal_robots",
    "solve_traffic",
    "stable_robots_set",
    "validate_model",
]
