"""Policies for choosing which types get a parameter update each step.

Updating every type is safe but expensive; the alternatives pick a single
type per step, either by sampling the current belief or by treating the
choice as a multi-armed bandit whose reward is the size of the resulting
estimate change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .agent_model import ParameterVector
from .beliefs import TypeBelief

SELECTION_POLICIES = ("all", "posterior", "ucb1")


@dataclass
class BanditStats:
    """Per-arm pull counts and incremental mean rewards."""

    counts: np.ndarray
    means: np.ndarray
    total: int = 0

    @staticmethod
    def fresh(n_arms: int) -> "BanditStats":
        return BanditStats(np.zeros(n_arms, dtype=int), np.zeros(n_arms), 0)

    def copy(self) -> "BanditStats":
        return BanditStats(self.counts.copy(), self.means.copy(), self.total)


def select_all(type_space_size: int) -> set[int]:
    """Update every type."""
    return set(range(type_space_size))


def select_posterior(belief: TypeBelief, rng: np.random.Generator) -> set[int]:
    """Sample a single type index from the current belief."""
    k = int(rng.choice(len(belief), p=belief.probs / belief.probs.sum()))
    return {k}


def bandit_reward(p_new: ParameterVector, p_old: ParameterVector) -> float:
    """L1 change in the estimate, normalised by the total width of the bounds.

    0 means the update left the estimate unchanged; 1 is the largest possible
    move inside the box.
    """
    if p_new.bounds != p_old.bounds:
        raise ValueError("parameter vectors have mismatched bounds")
    width = sum(hi - lo for lo, hi in p_new.bounds)
    change = sum(abs(a - b) for a, b in zip(p_new.values, p_old.values))
    return change / width


def select_ucb1(stats: BanditStats) -> set[int]:
    """UCB1 arm choice: unpulled arms first, then mean plus exploration bonus.

    Ties break toward the lowest index so runs are reproducible.
    """
    for k in range(len(stats.counts)):
        if stats.counts[k] == 0:
            return {k}
    best_k, best_v = 0, -math.inf
    for k in range(len(stats.counts)):
        v = stats.means[k] + math.sqrt(2.0 * math.log(stats.total) / stats.counts[k])
        if v > best_v:
            best_k, best_v = k, v
    return {best_k}


def record_reward(stats: BanditStats, index: int, reward: float) -> BanditStats:
    """Return stats with one more pull of ``index`` folded into its mean."""
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward {reward} outside [0, 1]")
    out = stats.copy()
    out.counts[index] += 1
    out.total += 1
    out.means[index] += (reward - out.means[index]) / out.counts[index]
    return out
