"""Pareto set learning with evolutionary preference sampling."""

from .core import (
    DegenerateInputError,
    DimensionError,
    EvaluatedPreference,
    NumericStateError,
    dominates,
    make_rng,
    nondominated_mask,
    pareto_filter,
    simplex_project,
)
from .eps import (
    EpsConfig,
    crowding_distance,
    fast_nondominated_sort,
    generate_offspring,
    run_eps_training,
    run_uniform_training,
    sample_uniform,
    select_subset,
)
from .estimator import ParetoSetLearner
from .indicators import hypervolume_exact, hypervolume_mc, log_hv_difference
from .model import Adam, OptimizerConfig, ParetoSetModel, training_step
from .problems import PROBLEMS, DomainError, get_problem
from .scalarize import IdealPoint, Scalarization, s_cosmos, s_ls, s_mtch, s_tch

__version__ = "0.1.0"

__all__ = [
    "Adam", "DegenerateInputError", "DimensionError", "DomainError", "EpsConfig", "EvaluatedPreference",
    "IdealPoint", "NumericStateError", "OptimizerConfig", "PROBLEMS", "ParetoSetLearner", "ParetoSetModel",
    "Scalarization", "crowding_distance", "dominates", "fast_nondominated_sort", "generate_offspring",
    "get_problem", "hypervolume_exact", "hypervolume_mc", "log_hv_difference", "make_rng",
    "nondominated_mask", "pareto_filter", "run_eps_training", "run_uniform_training", "s_cosmos", "s_ls",
    "s_mtch", "s_tch", "sample_uniform", "select_subset", "simplex_project", "training_step",
]
