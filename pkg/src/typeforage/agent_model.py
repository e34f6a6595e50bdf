"""Blackbox behaviour models for other agents.

A behaviour model ("type") maps an interaction history to a probability
distribution over the modelled agent's next action. Types carry bounded
continuous parameters and an opaque internal state; because the state may
depend on past parameter values, changing parameters requires recomputing
the state from the start of the history (full replay).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

PROB_FLOOR = 1e-12


class BoundsViolation(ValueError):
    """Raised when parameter values fall outside their declared bounds."""


@dataclass(frozen=True)
class ActionDistribution:
    """Dense probability distribution over an enumerated action space."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-D array")
        if np.any(probs < 0.0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()}, not 1")

    def __len__(self) -> int:
        return self.probs.size

    def prob(self, action: int) -> float:
        return float(self.probs[action])

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.probs.size, p=self.probs / self.probs.sum()))


@dataclass(frozen=True)
class Observation:
    """One entry of the controlled agent's history.

    ``snapshot`` is the full world state visible at step ``step``;
    ``prev_actions`` holds every agent's action at ``step - 1`` and is
    required for all steps after the first.
    """

    step: int
    snapshot: Any
    prev_actions: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.step > 0 and self.prev_actions is None:
            raise ValueError("observations after step 0 must carry previous actions")


@dataclass(frozen=True)
class ParameterVector:
    """Point in a box of closed parameter intervals."""

    values: tuple[float, ...]
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(
            self, "bounds", tuple((float(a), float(b)) for a, b in self.bounds)
        )
        if len(self.values) != len(self.bounds):
            raise ValueError("values and bounds must have equal length")
        for v, (lo, hi) in zip(self.values, self.bounds):
            if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
                raise ValueError(f"bounds [{lo}, {hi}] must be finite with lo < hi")
            if not lo <= v <= hi:
                raise BoundsViolation(f"value {v} outside [{lo}, {hi}]")

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def with_value(self, k: int, x: float) -> "ParameterVector":
        values = list(self.values)
        values[k] = x
        return ParameterVector(tuple(values), self.bounds)

    def clamped(self, raw: Sequence[float]) -> "ParameterVector":
        """Project raw coordinates onto the box."""
        values = tuple(
            min(max(float(x), lo), hi) for x, (lo, hi) in zip(raw, self.bounds)
        )
        return ParameterVector(values, self.bounds)

    @staticmethod
    def uniform(
        bounds: Sequence[tuple[float, float]], rng: np.random.Generator
    ) -> "ParameterVector":
        values = tuple(float(rng.uniform(lo, hi)) for lo, hi in bounds)
        return ParameterVector(values, tuple(bounds))


class HypotheticalType:
    """Base class for blackbox behaviour models.

    Subclasses implement ``initial_state`` and ``step``. Instances are
    immutable values: stepping or replaying produces a new instance via
    ``with_state``. ``agent_index`` identifies the modelled agent's slot in
    joint-action tuples.
    """

    identifier: str
    bounds: tuple[tuple[float, float], ...]
    markovian: tuple[bool, ...]
    agent_index: int

    def __init__(self, identifier, bounds, markovian, agent_index, state=None):
        self.identifier = identifier
        self.bounds = tuple((float(a), float(b)) for a, b in bounds)
        self.markovian = tuple(markovian)
        self.agent_index = agent_index
        self.state = self.initial_state() if state is None else state

    def initial_state(self) -> Any:
        raise NotImplementedError

    def step(
        self, state: Any, observation: Observation, params: ParameterVector
    ) -> tuple[ActionDistribution, Any]:
        """Distribution over the modelled agent's next action, plus successor state."""
        raise NotImplementedError

    def with_state(self, state: Any) -> "HypotheticalType":
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.state = state
        return clone

    # Replay-based evaluation. Subclasses may override with faster
    # equivalents as long as behaviour is identical.

    def action_probabilities(
        self, history: Sequence[Observation], params: ParameterVector
    ) -> ActionDistribution:
        state = self.initial_state()
        dist = None
        for obs in history:
            dist, state = self.step(state, obs, params)
        if dist is None:
            raise ValueError("history must contain at least one observation")
        return dist

    def replayed_state(
        self, history: Sequence[Observation], params: ParameterVector
    ) -> Any:
        state = self.initial_state()
        for obs in history:
            _, state = self.step(state, obs, params)
        return state

    def history_log_likelihood(
        self, history: Sequence[Observation], params: ParameterVector
    ) -> float:
        """Sum of log probabilities of the modelled agent's observed actions.

        Observation ``t`` carries the action taken at ``t - 1``, so each
        observed action is scored against the distribution computed from the
        history up to the preceding step.
        """
        state = self.initial_state()
        total = 0.0
        dist = None
        for obs in history:
            if dist is not None and obs.prev_actions is not None:
                p = dist.prob(obs.prev_actions[self.agent_index])
                total += np.log(max(p, PROB_FLOOR))
            dist, state = self.step(state, obs, params)
        return total


def check_bounds(type_: HypotheticalType, params: ParameterVector) -> None:
    if len(params) != len(type_.bounds):
        raise BoundsViolation(
            f"{type_.identifier} expects {len(type_.bounds)} parameters, got {len(params)}"
        )
    for v, (lo, hi) in zip(params.values, type_.bounds):
        if not lo <= v <= hi:
            raise BoundsViolation(
                f"{type_.identifier}: value {v} outside [{lo}, {hi}]"
            )


def action_probabilities(
    type_: HypotheticalType,
    history: Sequence[Observation],
    params: ParameterVector,
) -> ActionDistribution:
    """Distribution the type assigns to the modelled agent's next action."""
    check_bounds(type_, params)
    return type_.action_probabilities(history, params)


def replay_internal_state(
    type_: HypotheticalType,
    history: Sequence[Observation],
    params: ParameterVector,
) -> HypotheticalType:
    """Type whose internal state was recomputed over ``history`` under ``params``."""
    check_bounds(type_, params)
    return type_.with_state(type_.replayed_state(history, params))


def history_log_likelihood(
    type_: HypotheticalType,
    history: Sequence[Observation],
    params: ParameterVector,
) -> float:
    """Log of the joint probability of all observed actions in the history."""
    check_bounds(type_, params)
    return type_.history_log_likelihood(history, params)
