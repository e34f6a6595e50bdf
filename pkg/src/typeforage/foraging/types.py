"""The four parameterised foraging behaviours and their history plumbing.

All four kinds share one template: remember a destination until reached,
pick a new one with a kind-specific rule, then load next to a destination
item or take the first A* move towards the destination, with a 0.01
mixing floor over all five actions. Parameters are skill level p1 in
[0, 1] and view radius/angle fractions p2, p3 in [0.1, 1]; the destination
memory makes all three non-Markovian, so evaluating new parameter values
replays the whole history.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..agent_model import (
    ActionDistribution,
    HypotheticalType,
    Observation,
    ParameterVector,
)
from . import _kernels as K
from .world import PARAM_BOUNDS, TYPE_NAMES, ForagingState

EMPTY_MEM = (-1, -1)


@dataclass(frozen=True)
class ForagingSnapshot:
    """Time-varying world facts a type can see: poses plus collected flags."""

    rows: np.ndarray
    cols: np.ndarray
    headings: np.ndarray
    collected: np.ndarray

    @staticmethod
    def from_state(state: ForagingState) -> "ForagingSnapshot":
        return ForagingSnapshot(
            state.rows.copy(), state.cols.copy(),
            state.headings.copy(), state.collected.copy(),
        )


class ForagingHistory:
    """Preallocated per-step snapshots and joint actions of one episode."""

    def __init__(self, capacity: int, n_agents: int, n_items: int):
        self.hrows = np.empty((capacity + 1, n_agents), np.int64)
        self.hcols = np.empty((capacity + 1, n_agents), np.int64)
        self.hheads = np.empty((capacity + 1, n_agents), np.int64)
        self.hcoll = np.empty((capacity + 1, n_items), np.uint8)
        self.hacts = np.empty((capacity, n_agents), np.int64)
        self.n_snapshots = 0
        self.n_actions = 0

    def append_state(self, state: ForagingState):
        t = self.n_snapshots
        self.hrows[t] = state.rows
        self.hcols[t] = state.cols
        self.hheads[t] = state.headings
        self.hcoll[t] = state.collected
        self.n_snapshots = t + 1

    def append_actions(self, actions: Sequence[int]):
        self.hacts[self.n_actions] = np.asarray(actions, dtype=np.int64)
        self.n_actions += 1

    def window(self, length: int) -> "HistoryWindow":
        if length > self.n_snapshots or length > self.n_actions + 1:
            raise ValueError(f"window of {length} exceeds recorded history")
        return HistoryWindow(self, length)

    def snapshot(self, t: int) -> ForagingSnapshot:
        return ForagingSnapshot(
            self.hrows[t].copy(), self.hcols[t].copy(),
            self.hheads[t].copy(), self.hcoll[t].copy(),
        )


@dataclass(frozen=True)
class HistoryWindow:
    """First ``length`` snapshots of a history with their observed actions.

    The action at index t is the one taken at snapshot t, so a window of
    length L scores L observed actions and its final action distribution is
    the one for the action taken at snapshot L-1.
    """

    history: ForagingHistory
    length: int

    def __len__(self) -> int:
        return self.length


class ForagingType(HypotheticalType):
    """One of the four target rules bound to a specific modelled agent.

    The instance's static facts (grid size, item cells and levels, agent
    levels) are captured at construction; snapshots supply the rest. The
    internal state is the destination memory, (-1, -1) when empty.
    """

    def __init__(self, kind: int, agent_index: int, state: ForagingState, _mem=None):
        self.kind = kind
        self.width = state.width
        self.height = state.height
        self.levels = state.levels.copy()
        self.item_rows = state.item_rows.copy()
        self.item_cols = state.item_cols.copy()
        self.item_levels = state.item_levels.copy()
        super().__init__(TYPE_NAMES[kind], PARAM_BOUNDS, (False, False, False), agent_index, _mem)

    def initial_state(self):
        return EMPTY_MEM

    def step(self, state, observation, params):
        snap = observation.snapshot if isinstance(observation, Observation) else observation
        values = params.values if isinstance(params, ParameterVector) else tuple(params)
        probs = np.empty(K.N_ACTIONS)
        scratch = _scratch(self.levels.size, self.item_rows.size, self.width * self.height)
        n = self.levels.size
        mem_r, mem_c = K.type_step(
            self.kind, self.agent_index, values[0], values[1], values[2],
            np.full(n, values[1]), np.full(n, values[2]),
            state[0], state[1],
            snap.rows, snap.cols, self.levels, snap.headings,
            self.item_rows, self.item_cols, self.item_levels, snap.collected,
            self.width, self.height, probs, *scratch,
        )
        return ActionDistribution(probs), (int(mem_r), int(mem_c))

    # Fast replay paths. A HistoryWindow maps straight onto the compiled
    # replay; a plain observation sequence goes through the generic loop.

    def action_probabilities(self, history, params):
        if isinstance(history, HistoryWindow):
            if history.length == 0:
                raise ValueError("history must contain at least one observation")
            probs = np.empty(K.N_ACTIONS)
            self._replay(history, params, probs)
            return ActionDistribution(probs)
        return super().action_probabilities(history, params)

    def replayed_state(self, history, params):
        if isinstance(history, HistoryWindow):
            probs = np.empty(K.N_ACTIONS)
            return self._replay(history, params, probs)
        return super().replayed_state(history, params)

    def history_log_likelihood(self, history, params):
        if isinstance(history, HistoryWindow):
            h = history.history
            values = params.values
            return float(K.replay_loglik(
                self.kind, self.agent_index, values[0], values[1], values[2],
                h.hrows, h.hcols, h.hheads, h.hcoll, h.hacts,
                self.levels, self.item_rows, self.item_cols, self.item_levels,
                self.width, self.height, history.length,
            ))
        return super().history_log_likelihood(history, params)

    def replay(self, history, params):
        """One replay giving both the latest distribution and the memory.

        Equivalent to calling action_probabilities and replayed_state but
        walks the history once.
        """
        if isinstance(history, HistoryWindow):
            if history.length == 0:
                raise ValueError("history must contain at least one observation")
            probs = np.empty(K.N_ACTIONS)
            mem = self._replay(history, params, probs)
            return ActionDistribution(probs), mem
        state = self.initial_state()
        dist = None
        for obs in history:
            dist, state = self.step(state, obs, params)
        if dist is None:
            raise ValueError("history must contain at least one observation")
        return dist, state

    def _replay(self, window: HistoryWindow, params, probs: np.ndarray):
        h = window.history
        values = params.values if isinstance(params, ParameterVector) else tuple(params)
        mem_r, mem_c = K.replay_type(
            self.kind, self.agent_index, values[0], values[1], values[2],
            h.hrows, h.hcols, h.hheads, h.hcoll,
            self.levels, self.item_rows, self.item_cols, self.item_levels,
            self.width, self.height, window.length, probs,
        )
        return (int(mem_r), int(mem_c))


def make_type_space(state: ForagingState, agent_index: int) -> list[ForagingType]:
    """All four hypothesised behaviours for one modelled agent."""
    return [ForagingType(kind, agent_index, state) for kind in range(len(TYPE_NAMES))]


def _scratch(n: int, m: int, n_cells: int):
    return (
        np.empty(n, np.uint8), np.empty(m, np.uint8),
        np.empty(n, np.uint8), np.empty(m, np.uint8),
        np.empty(n_cells, np.uint8),
        np.empty(n_cells, np.int64), np.empty(n_cells, np.int64),
        np.empty(4 * n_cells + 8, np.int64), np.empty(4 * n_cells + 8, np.int64),
        np.empty(n_cells + 1, np.int64),
    )


def _view_values(params) -> tuple[float, float, float]:
    if isinstance(params, ParameterVector):
        return params.values
    values = tuple(float(v) for v in params)
    if len(values) == 2:
        return (0.5,) + values
    return values


def view_certainty(state: ForagingState, agent_index: int, params, cell: tuple[int, int]) -> float:
    """Overlap fraction of the agent's view sector with one cell."""
    _, p2, p3 = _view_values(params)
    diag = float(np.hypot(state.width, state.height))
    half = min(p3 * np.pi, np.pi)
    return float(K.cell_certainty(
        state.rows[agent_index] + 0.5, state.cols[agent_index] + 0.5,
        float(K.DROW[state.headings[agent_index]]), float(K.DCOL[state.headings[agent_index]]),
        float(np.cos(half)), (p2 * diag) ** 2,
        float(cell[0]), float(cell[1]),
    ))


def visible_agents_and_items(state: ForagingState, agent_index: int, params) -> tuple[set[int], set[int]]:
    """Indices of agents and uncollected items seen with certainty >= 0.1."""
    _, p2, p3 = _view_values(params)
    amask = np.empty(state.n_agents, np.uint8)
    imask = np.empty(state.n_items, np.uint8)
    K.fill_visibility(
        agent_index, state.rows[agent_index], state.cols[agent_index],
        state.headings[agent_index], p2, p3,
        state.rows, state.cols, state.item_rows, state.item_cols, state.collected,
        state.width, state.height, amask, imask,
    )
    return set(np.flatnonzero(amask).tolist()), set(np.flatnonzero(imask).tolist())


def _choose(kind: int, visible_agents: Iterable[int], visible_items: Iterable[int],
            own_level: float, state: ForagingState, agent_index: int, view_params) -> tuple[int, int] | None:
    amask = np.zeros(state.n_agents, np.uint8)
    imask = np.zeros(state.n_items, np.uint8)
    for a in visible_agents:
        amask[a] = 1
    amask[agent_index] = 0
    for i in visible_items:
        if not state.collected[i]:
            imask[i] = 1
    p2, p3 = (view_params if view_params is not None else (1.0, 1.0))
    n = state.n_agents
    r, c = K.choose_target_from_masks(
        kind, agent_index, float(own_level), np.full(n, float(p2)), np.full(n, float(p3)),
        state.rows, state.cols, state.levels, state.headings,
        state.item_rows, state.item_cols, state.item_levels, state.collected,
        state.width, state.height, amask, imask,
        np.empty(n, np.uint8), np.empty(state.n_items, np.uint8),
    )
    if r < 0:
        return None
    return (int(r), int(c))


def choose_target_l1(visible_agents, visible_items, own_level, state, agent_index, view_params=None):
    """Furthest visible item, or None."""
    return _choose(0, visible_agents, visible_items, own_level, state, agent_index, view_params)


def choose_target_l2(visible_agents, visible_items, own_level, state, agent_index, view_params=None):
    """Visible item with the highest level below own level, else highest overall."""
    return _choose(1, visible_agents, visible_items, own_level, state, agent_index, view_params)


def choose_target_f1(visible_agents, visible_items, own_level, state, agent_index, view_params=None):
    """Furthest visible agent's own L1 pick (or that agent's cell if no items)."""
    return _choose(2, visible_agents, visible_items, own_level, state, agent_index, view_params)


def choose_target_f2(visible_agents, visible_items, own_level, state, agent_index, view_params=None):
    """Strongest visible agent's L2 pick (or that agent's cell if no items)."""
    return _choose(3, visible_agents, visible_items, own_level, state, agent_index, view_params)


def foraging_type_step(type_: ForagingType, type_state, state: ForagingState, params):
    """One template step on a live world state; returns (distribution, new memory)."""
    return type_.step(type_state, ForagingSnapshot.from_state(state), params)


def astar_path(state: ForagingState, from_cell: tuple[int, int], to_cell: tuple[int, int]) -> list[int]:
    """Moves of a shortest path; a single greedy move if unreachable.

    Agents (other than one standing on ``from_cell``) and uncollected items
    block, except at the destination.
    """
    if tuple(from_cell) == tuple(to_cell):
        raise ValueError("path endpoints must differ")
    w, h = state.width, state.height
    blocked = np.zeros(h * w, np.uint8)
    for a in range(state.n_agents):
        if (state.rows[a], state.cols[a]) != tuple(from_cell):
            blocked[state.rows[a] * w + state.cols[a]] = 1
    for i in range(state.n_items):
        if not state.collected[i]:
            blocked[state.item_rows[i] * w + state.item_cols[i]] = 1
    blocked[to_cell[0] * w + to_cell[1]] = 0
    path_out = np.empty(h * w + 1, np.int64)
    length = K.astar_path(
        blocked, w, h, from_cell[0], from_cell[1], to_cell[0], to_cell[1],
        np.empty(h * w, np.int64), np.empty(h * w, np.int64),
        np.empty(4 * h * w + 8, np.int64), np.empty(4 * h * w + 8, np.int64),
        path_out,
    )
    if length < 0:
        return [int(path_out[0])]
    return path_out[:length].tolist()
