"""Posterior over a finite space of behaviour types.

The belief is a plain probability vector updated by Bayes' rule from the
likelihood each type assigns to the modelled agent's last observed action.
Likelihoods are floored at a small positive constant so that no type can be
eliminated by a single zero-probability prediction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .agent_model import (
    PROB_FLOOR,
    HypotheticalType,
    Observation,
    ParameterVector,
    action_probabilities,
)


@dataclass(frozen=True)
class TypeBelief:
    """Probability vector over the type space; dimension is fixed per episode."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("belief must be a non-empty 1-D vector")
        if np.any(probs < 0.0):
            raise ValueError("belief entries must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"belief sums to {probs.sum()}, not 1")

    @staticmethod
    def uniform(n: int) -> "TypeBelief":
        return TypeBelief(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.probs.size

    def prob(self, k: int) -> float:
        return float(self.probs[k])


def update_belief(belief: TypeBelief, likelihoods: Sequence[float]) -> TypeBelief:
    """Posterior proportional to likelihood times prior, renormalised.

    Likelihoods are clamped below at ``PROB_FLOOR`` before multiplying, so
    the product cannot vanish for a type with positive prior mass.
    """
    lik = np.asarray(likelihoods, dtype=float)
    if lik.shape != belief.probs.shape:
        raise ValueError(
            f"likelihood vector has shape {lik.shape}, belief has {belief.probs.shape}"
        )
    if np.any(lik < 0.0):
        raise ValueError("likelihoods must be nonnegative")
    post = np.maximum(lik, PROB_FLOOR) * belief.probs
    total = float(post.sum())
    return TypeBelief(post / total)


def likelihood_of_observed(
    type_: HypotheticalType,
    history: Sequence[Observation],
    params: ParameterVector,
    observed_action: int,
) -> float:
    """Probability the type assigns to the action the agent actually took."""
    dist = action_probabilities(type_, history, params)
    return max(dist.prob(observed_action), PROB_FLOOR)
