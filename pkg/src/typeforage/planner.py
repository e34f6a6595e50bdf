"""UCT planning for the controlled agent.

Each rollout draws one type per modelled agent from the current belief and
keeps it for the whole rollout; modelled agents then act from their
estimated parameters while the controlled agent follows UCB inside the
tree and uniform random beyond it. The tree is an arena of per-node action
statistics with children keyed by (action, next-state digest), which folds
opponent randomness and move-order ties into the transition. Subtrees
survive across steps: after acting, the child matching the real outcome
becomes the next root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import types as nb_types
from numba.typed import Dict

from .beliefs import TypeBelief
from .foraging import _kernels as K
from .foraging.world import ForagingState


@dataclass
class PlannerConfig:
    rollouts: int = 300
    horizon: int = 100
    discount: float = 0.95
    exploration: float = 2.0

    @staticmethod
    def for_world(name: str, **overrides) -> "PlannerConfig":
        rollouts = {"10x10": 300, "15x15": 500}.get(name)
        if rollouts is None:
            raise ValueError(f"unknown world preset {name!r}")
        cfg = PlannerConfig(rollouts=rollouts)
        for key, value in overrides.items():
            if value is not None:
                setattr(cfg, key, value)
        return cfg


class UctPlanner:
    """Search tree persisted across the steps of one episode."""

    def __init__(self, config: PlannerConfig, n_steps_hint: int, seed: int):
        self.config = config
        capacity = config.rollouts * (n_steps_hint + 2) + 64
        self.node_visits = np.zeros(capacity, np.int64)
        self.action_visits = np.zeros((capacity, K.N_ACTIONS), np.int64)
        self.action_value = np.zeros((capacity, K.N_ACTIONS), np.float64)
        self.children = Dict.empty(nb_types.UniTuple(nb_types.int64, 2), nb_types.int64)
        self.meta = np.array([0, 1], np.int64)  # root id, node count
        self.rng = K.seed_rng(seed)

    @property
    def root(self) -> int:
        return int(self.meta[0])

    def root_visits(self) -> int:
        return int(self.node_visits[self.root])

    def root_stats(self) -> tuple[np.ndarray, np.ndarray]:
        return self.action_visits[self.root].copy(), self.action_value[self.root].copy()

    def plan(
        self,
        state: ForagingState,
        belief: np.ndarray,
        estimates: np.ndarray,
        memories: np.ndarray,
    ) -> int:
        """Choose the controlled agent's action for the current state.

        ``belief`` is (modelled agents, types); ``estimates`` adds a trailing
        parameter axis and ``memories`` the replayed destination memory per
        (agent, type) under those estimates.
        """
        cfg = self.config
        return int(K.uct_plan(
            state.width, state.height,
            state.rows, state.cols, state.headings, state.levels,
            state.item_rows, state.item_cols, state.item_levels, state.collected,
            np.ascontiguousarray(belief, dtype=np.float64),
            np.ascontiguousarray(estimates, dtype=np.float64),
            np.ascontiguousarray(memories, dtype=np.int64),
            self.node_visits, self.action_visits, self.action_value,
            self.children, self.meta,
            cfg.rollouts, cfg.horizon, cfg.discount, cfg.exploration, self.rng,
        ))

    def advance(self, taken_action: int, next_state: ForagingState):
        """Promote the child matching the observed outcome, or start fresh."""
        digest = int(K.state_digest(
            next_state.rows, next_state.cols, next_state.headings, next_state.collected,
        ))
        key = (self.root * K.N_ACTIONS + int(taken_action), digest)
        child = self.children.get(key, -1)
        if child >= 0:
            self.meta[0] = child
        else:
            self.meta[0] = self._fresh_node()

    def _fresh_node(self) -> int:
        node = int(self.meta[1])
        if node >= self.node_visits.shape[0]:
            self._grow()
        self.meta[1] = node + 1
        self.node_visits[node] = 0
        self.action_visits[node] = 0
        self.action_value[node] = 0.0
        return node

    def _grow(self):
        extra = self.node_visits.shape[0]
        self.node_visits = np.concatenate([self.node_visits, np.zeros(extra, np.int64)])
        self.action_visits = np.concatenate([self.action_visits, np.zeros((extra, K.N_ACTIONS), np.int64)])
        self.action_value = np.concatenate([self.action_value, np.zeros((extra, K.N_ACTIONS), np.float64)])


def plan(
    state: ForagingState,
    beliefs: list[TypeBelief],
    estimates: np.ndarray,
    memories: np.ndarray,
    config: PlannerConfig,
    seed: int,
) -> int:
    """One-shot planning without tree reuse."""
    planner = UctPlanner(config, 1, seed)
    stacked = np.stack([b.probs for b in beliefs]) if beliefs else np.zeros((0, 4))
    return planner.plan(state, stacked, estimates, memories)


def reuse_subtree(planner: UctPlanner, taken_action: int, observed_next_state: ForagingState) -> UctPlanner:
    """Advance the tree root past an executed action and observed outcome."""
    planner.advance(taken_action, observed_next_state)
    return planner
