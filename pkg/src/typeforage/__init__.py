"""Belief-driven modelling of other agents with blackbox behaviour types.

A controlled agent maintains a posterior over hypothesised types for each
other agent, estimates the bounded continuous parameters inside those
types from observed actions, and plans against the resulting models. The
foraging subpackage provides the level-based grid world the approach is
evaluated in.
"""

from .agent_model import (
    PROB_FLOOR,
    ActionDistribution,
    BoundsViolation,
    HypotheticalType,
    Observation,
    ParameterVector,
    action_probabilities,
    check_bounds,
    history_log_likelihood,
    replay_internal_state,
)
from .beliefs import TypeBelief, likelihood_of_observed, update_belief
from .estimation import (
    GpSurrogate,
    ParameterPosterior,
    abu_update,
    aga_update,
    backtracking_step,
    ego_maximize,
    ego_update,
    expected_improvement,
    gp_posterior,
    sample_likelihood_profile,
)
from .harness import (
    EpisodeRecord,
    ExperimentConfig,
    MethodSpec,
    aggregate_records,
    replay_trace,
    run_baseline,
    run_batch,
    run_episode,
)
from .planner import PlannerConfig, UctPlanner, plan, reuse_subtree
from .polynomials import UnivariatePolynomial, fit_polynomial
from .selection import (
    SELECTION_POLICIES,
    BanditStats,
    bandit_reward,
    record_reward,
    select_all,
    select_posterior,
    select_ucb1,
)

__all__ = [
    "PROB_FLOOR",
    "ActionDistribution",
    "BoundsViolation",
    "HypotheticalType",
    "Observation",
    "ParameterVector",
    "action_probabilities",
    "check_bounds",
    "history_log_likelihood",
    "replay_internal_state",
    "TypeBelief",
    "likelihood_of_observed",
    "update_belief",
    "GpSurrogate",
    "ParameterPosterior",
    "abu_update",
    "aga_update",
    "backtracking_step",
    "ego_maximize",
    "ego_update",
    "expected_improvement",
    "gp_posterior",
    "sample_likelihood_profile",
    "EpisodeRecord",
    "ExperimentConfig",
    "MethodSpec",
    "aggregate_records",
    "replay_trace",
    "run_baseline",
    "run_batch",
    "run_episode",
    "PlannerConfig",
    "UctPlanner",
    "plan",
    "reuse_subtree",
    "UnivariatePolynomial",
    "fit_polynomial",
    "SELECTION_POLICIES",
    "BanditStats",
    "bandit_reward",
    "record_reward",
    "select_all",
    "select_posterior",
    "select_ucb1",
]

__version__ = "0.1.0"
