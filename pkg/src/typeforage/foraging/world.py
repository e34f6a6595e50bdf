"""Level-based foraging world: state, dynamics and instance generation.

Agents occupy grid cells and either move (N, E, S, W) or load. An item is
collected when the skill levels of the agents loading next to it pool to
at least the item's level; the whole team then scores one point. Agent
index 0 is the controlled agent throughout the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K

ACTION_NAMES = ("N", "E", "S", "W", "load")
N_TYPES = 4
TYPE_NAMES = ("L1", "L2", "F1", "F2")
PARAM_BOUNDS = ((0.0, 1.0), (0.1, 1.0), (0.1, 1.0))

GENERATION_ATTEMPTS = 100_000


@dataclass
class WorldConfig:
    width: int
    height: int
    n_agents: int
    n_items: int
    max_steps: int

    @staticmethod
    def preset(name: str) -> "WorldConfig":
        if name == "10x10":
            return WorldConfig(10, 10, 2, 5, 100)
        if name == "15x15":
            return WorldConfig(15, 15, 3, 10, 150)
        raise ValueError(f"unknown world preset {name!r} (expected '10x10' or '15x15')")


@dataclass
class ForagingState:
    """Mutable world state backed by flat arrays (agent 0 is controlled)."""

    width: int
    height: int
    rows: np.ndarray
    cols: np.ndarray
    headings: np.ndarray
    levels: np.ndarray
    item_rows: np.ndarray
    item_cols: np.ndarray
    item_levels: np.ndarray
    collected: np.ndarray
    step: int = 0

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.headings = np.asarray(self.headings, dtype=np.int64)
        self.levels = np.asarray(self.levels, dtype=np.float64)
        self.item_rows = np.asarray(self.item_rows, dtype=np.int64)
        self.item_cols = np.asarray(self.item_cols, dtype=np.int64)
        self.item_levels = np.asarray(self.item_levels, dtype=np.float64)
        self.collected = np.asarray(self.collected, dtype=np.uint8)

    @property
    def n_agents(self) -> int:
        return self.rows.size

    @property
    def n_items(self) -> int:
        return self.item_rows.size

    def remaining_items(self) -> int:
        return int(np.sum(self.collected == 0))

    def copy(self) -> "ForagingState":
        return ForagingState(
            self.width, self.height,
            self.rows.copy(), self.cols.copy(), self.headings.copy(), self.levels.copy(),
            self.item_rows.copy(), self.item_cols.copy(), self.item_levels.copy(),
            self.collected.copy(), self.step,
        )

    def digest(self) -> int:
        return int(K.state_digest(self.rows, self.cols, self.headings, self.collected))

    def check_invariants(self):
        """Raise if entity placement breaks the world rules."""
        occupied = set()
        for r, c in zip(self.rows, self.cols):
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise ValueError("agent out of grid")
            occupied.add((int(r), int(c)))
        if len(occupied) != self.n_agents:
            raise ValueError("two agents share a cell")
        for i in range(self.n_items):
            if self.collected[i]:
                continue
            cell = (int(self.item_rows[i]), int(self.item_cols[i]))
            if not (0 <= cell[0] < self.height and 0 <= cell[1] < self.width):
                raise ValueError("item out of grid")
            if cell in occupied:
                raise ValueError("item shares a cell with another entity")
            occupied.add(cell)

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "agents": [
                {"row": int(r), "col": int(c), "level": float(lv), "heading": ACTION_NAMES[hd]}
                for r, c, lv, hd in zip(self.rows, self.cols, self.levels, self.headings)
            ],
            "items": [
                {"row": int(r), "col": int(c), "level": float(lv), "collected": bool(fl)}
                for r, c, lv, fl in zip(self.item_rows, self.item_cols, self.item_levels, self.collected)
            ],
            "step": self.step,
        }

    @staticmethod
    def from_json(data: dict) -> "ForagingState":
        agents = data["agents"]
        items = data["items"]
        return ForagingState(
            data["width"], data["height"],
            np.array([a["row"] for a in agents]),
            np.array([a["col"] for a in agents]),
            np.array([ACTION_NAMES.index(a["heading"]) for a in agents]),
            np.array([a["level"] for a in agents]),
            np.array([i["row"] for i in items]),
            np.array([i["col"] for i in items]),
            np.array([i["level"] for i in items]),
            np.array([1 if i["collected"] else 0 for i in items]),
            data.get("step", 0),
        )

    def render(self) -> str:
        """ASCII picture: digits = agents, letters = items, '.' = empty."""
        grid = [["." for _ in range(self.width)] for _ in range(self.height)]
        for i in range(self.n_items):
            if not self.collected[i]:
                grid[self.item_rows[i]][self.item_cols[i]] = chr(ord("a") + i % 26)
        for a in range(self.n_agents):
            grid[self.rows[a]][self.cols[a]] = str(a)
        return "\n".join("".join(row) for row in grid)


def step_world(state: ForagingState, joint_actions: Sequence[int], rng_seed: int) -> tuple[ForagingState, int]:
    """Advance a copy of the state by one joint action; returns (state', reward).

    Load resolution happens before movement; move conflicts are settled by a
    random execution order drawn from ``rng_seed``.
    """
    actions = np.asarray(joint_actions, dtype=np.int64)
    if actions.shape != (state.n_agents,):
        raise ValueError(f"expected {state.n_agents} actions, got shape {actions.shape}")
    if np.any(actions < 0) or np.any(actions >= K.N_ACTIONS):
        raise ValueError(f"malformed action in {actions.tolist()}")
    nxt = state.copy()
    rng = K.seed_rng(rng_seed)
    order = np.empty(state.n_agents, dtype=np.int64)
    reward = K.world_step(
        nxt.width, nxt.height, nxt.rows, nxt.cols, nxt.headings, nxt.levels,
        nxt.item_rows, nxt.item_cols, nxt.item_levels, nxt.collected,
        actions, rng, order,
    )
    nxt.step = state.step + 1
    return nxt, int(reward)


@dataclass
class Instance:
    """A generated episode setup.

    True type and parameters exist for every modelled agent (world index
    1..n-1). The initial parameter estimates are drawn once here so every
    method evaluated on this instance starts from the same guesses.
    """

    state: ForagingState
    true_kinds: np.ndarray
    true_params: np.ndarray
    initial_estimates: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.true_kinds = np.asarray(self.true_kinds, dtype=np.int64)
        self.true_params = np.asarray(self.true_params, dtype=np.float64)
        self.initial_estimates = np.asarray(self.initial_estimates, dtype=np.float64)

    @property
    def n_modelled(self) -> int:
        return self.true_kinds.size

    def to_json(self) -> dict:
        return {
            "state": self.state.to_json(),
            "true_types": [TYPE_NAMES[k] for k in self.true_kinds],
            "true_params": self.true_params.tolist(),
            "initial_estimates": self.initial_estimates.tolist(),
            "seed": self.seed,
        }

    @staticmethod
    def from_json(data: dict) -> "Instance":
        return Instance(
            ForagingState.from_json(data["state"]),
            np.array([TYPE_NAMES.index(t) for t in data["true_types"]]),
            np.array(data["true_params"]),
            np.array(data["initial_estimates"]),
            data.get("seed", 0),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)

    @staticmethod
    def load(path) -> "Instance":
        with open(path) as fh:
            return Instance.from_json(json.load(fh))


def generate_instance(config: WorldConfig, seed) -> Instance:
    """Rejection-sample a world satisfying the placement and level rules.

    Constraints: entities on distinct cells, items off the border and with
    pairwise Euclidean spacing > 1, every agent level below the highest item
    level, and no item level above the summed agent levels. True types are
    uniform over the four kinds; true view parameters are uniform on their
    bounds; the true skill parameter is the agent's actual level.
    """
    rng = np.random.default_rng(seed)
    w, h, n, m = config.width, config.height, config.n_agents, config.n_items
    if w < 3 or h < 3 or (w - 2) * (h - 2) < m or w * h < n + m:
        raise ValueError("grid too small for the requested entity count")

    for _ in range(GENERATION_ATTEMPTS):
        agent_cells = rng.choice(w * h, size=n, replace=False)
        rows = agent_cells // w
        cols = agent_cells % w
        interior = [
            r * w + c
            for r in range(1, h - 1)
            for c in range(1, w - 1)
            if r * w + c not in set(agent_cells.tolist())
        ]
        if len(interior) < m:
            continue
        item_cells = rng.choice(np.array(interior), size=m, replace=False)
        irows = item_cells // w
        icols = item_cells % w
        d2 = (irows[:, None] - irows[None, :]) ** 2 + (icols[:, None] - icols[None, :]) ** 2
        np.fill_diagonal(d2, 4)
        if np.any(d2 <= 1):
            continue
        levels = rng.uniform(0.0, 1.0, n)
        item_levels = rng.uniform(0.0, 1.0, m)
        if np.max(levels) >= np.max(item_levels):
            continue
        if np.max(item_levels) > np.sum(levels):
            continue
        headings = rng.integers(0, 4, n)
        state = ForagingState(
            w, h, rows, cols, headings, levels,
            irows, icols, item_levels, np.zeros(m, dtype=np.uint8),
        )
        n_opp = n - 1
        true_kinds = rng.integers(0, N_TYPES, n_opp)
        true_params = np.empty((n_opp, 3))
        true_params[:, 0] = levels[1:]
        true_params[:, 1] = rng.uniform(0.1, 1.0, n_opp)
        true_params[:, 2] = rng.uniform(0.1, 1.0, n_opp)
        init = np.empty((n_opp, N_TYPES, 3))
        for k, (lo, hi) in enumerate(PARAM_BOUNDS):
            init[:, :, k] = rng.uniform(lo, hi, (n_opp, N_TYPES))
        seed_value = int(seed) if isinstance(seed, (int, np.integer)) else 0
        return Instance(state, true_kinds, true_params, init, seed_value)

    raise RuntimeError(f"no valid instance found in {GENERATION_ATTEMPTS} attempts")
