"""Experiment orchestration: episodes, baselines and batch runs.

Per episode and step the controlled agent (a) picks which hypothesised
types get fresh parameter estimates, (b) re-estimates them from the latest
observations, (c) replays internal states under the new estimates,
(d) updates its belief over types from the probability each type gave the
just-observed action, and (e) plans with UCT. Batches run every method on
the same instance sequence so comparisons are paired, and write fixed-
format CSVs plus an aggregate summary.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent_model import PROB_FLOOR, ParameterVector
from .beliefs import TypeBelief, update_belief
from .estimation import ParameterPosterior, abu_update, aga_update, ego_update
from .foraging import _kernels as K
from .foraging.types import ForagingHistory, make_type_space
from .foraging.world import (
    N_TYPES,
    PARAM_BOUNDS,
    Instance,
    WorldConfig,
    generate_instance,
)
from .planner import PlannerConfig, UctPlanner
from .selection import (
    BanditStats,
    bandit_reward,
    record_reward,
    select_all,
    select_posterior,
    select_ucb1,
)

ESTIMATORS = ("none", "aga", "abu", "ego")
INITS = ("random", "correct")

PER_STEP_COLUMNS = (
    "instance", "step", "agent", "belief_true_type",
    "err_p1", "err_p2", "err_p3", "selected_type", "update_seconds",
)
EPISODE_COLUMNS = ("instance", "completed", "steps")


@dataclass
class MethodSpec:
    """One configuration competing in a batch."""

    name: str
    estimator: str = "none"
    selection: str = "all"
    ego_budget: int = 10
    init: str = "random"

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.selection not in ("all", "posterior", "ucb1"):
            raise ValueError("selection must be all, posterior or ucb1")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        if self.ego_budget < 2:
            raise ValueError("ego_budget must be at least 2")

    @staticmethod
    def rnd() -> "MethodSpec":
        return MethodSpec("rnd", estimator="none", init="random")

    @staticmethod
    def cor() -> "MethodSpec":
        return MethodSpec("cor", estimator="none", init="correct")

    def to_json(self) -> dict:
        return {
            "name": self.name, "estimator": self.estimator, "selection": self.selection,
            "ego_budget": self.ego_budget, "init": self.init,
        }

    @staticmethod
    def from_json(data: dict) -> "MethodSpec":
        return MethodSpec(
            data["name"],
            data.get("estimator", "none"),
            data.get("selection", "all"),
            data.get("ego_budget", 10),
            data.get("init", "random"),
        )


def default_methods() -> list[MethodSpec]:
    return [
        MethodSpec.rnd(),
        MethodSpec.cor(),
        MethodSpec("aga-all", estimator="aga", selection="all"),
        MethodSpec("abu-all", estimator="abu", selection="all"),
        MethodSpec("ego-all", estimator="ego", selection="all", ego_budget=10),
    ]


@dataclass
class ExperimentConfig:
    world: str = "10x10"
    instances: int = 10
    seed: int = 0
    rollouts: int | None = None
    horizon: int = 100
    discount: float = 0.95
    exploration: float = 2.0
    save_traces: bool = False
    jobs: int = 1
    out: str | None = None
    leader_view: str = "own"
    methods: list[MethodSpec] = field(default_factory=default_methods)

    def __post_init__(self):
        if self.leader_view not in ("own", "leader"):
            raise ValueError("leader_view must be 'own' or 'leader'")

    def world_config(self) -> WorldConfig:
        return WorldConfig.preset(self.world)

    def planner_config(self) -> PlannerConfig:
        return PlannerConfig.for_world(
            self.world, rollouts=self.rollouts, horizon=self.horizon,
            discount=self.discount, exploration=self.exploration,
        )

    def to_json(self) -> dict:
        return {
            "world": self.world, "instances": self.instances, "seed": self.seed,
            "rollouts": self.rollouts, "horizon": self.horizon, "discount": self.discount,
            "exploration": self.exploration, "save_traces": self.save_traces,
            "jobs": self.jobs, "out": self.out, "leader_view": self.leader_view,
            "methods": [m.to_json() for m in self.methods],
        }

    @staticmethod
    def from_json(data: dict) -> "ExperimentConfig":
        cfg = ExperimentConfig(
            world=data.get("world", "10x10"),
            instances=data.get("instances", 10),
            seed=data.get("seed", 0),
            rollouts=data.get("rollouts"),
            horizon=data.get("horizon", 100),
            discount=data.get("discount", 0.95),
            exploration=data.get("exploration", 2.0),
            save_traces=data.get("save_traces", False),
            jobs=data.get("jobs", 1),
            out=data.get("out"),
            leader_view=data.get("leader_view", "own"),
        )
        if "methods" in data:
            cfg.methods = [MethodSpec.from_json(m) for m in data["methods"]]
        return cfg


@dataclass
class StepRow:
    step: int
    agent: int
    belief_true_type: float
    err: np.ndarray
    selected: tuple[int, ...]
    update_seconds: float


@dataclass
class EpisodeRecord:
    instance_index: int
    completed: bool
    steps: int
    rows: list[StepRow]
    trace: dict | None = None


def _stream(seed: int, instance_index: int, method_index: int, stream_id: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([seed, instance_index, method_index, stream_id])
    )


def leader_view_arrays(instance: Instance, mode: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-(modelled agent, potential leader) view parameters for followers.

    A follower simulating its leader's line of sight cannot know the
    leader's view cone; by default it substitutes its own ("own"). The
    "leader" mode instead lets real followers use each leader's true cone,
    falling back to their own when the leader is the controlled agent,
    which has no cone.
    """
    n = instance.state.n_agents
    true_params = instance.true_params
    lview_p2 = np.repeat(true_params[:, 1:2], n, axis=1)
    lview_p3 = np.repeat(true_params[:, 2:3], n, axis=1)
    if mode == "leader":
        lview_p2[:, 1:] = true_params[:, 1][np.newaxis, :]
        lview_p3[:, 1:] = true_params[:, 2][np.newaxis, :]
    return lview_p2, lview_p3


def run_episode(
    instance: Instance,
    method: MethodSpec,
    config: ExperimentConfig,
    instance_index: int = 0,
    method_index: int = 0,
) -> EpisodeRecord:
    """Play one episode of the full select/estimate/replay/update/plan loop."""
    world_cfg = config.world_config()
    state = instance.state.copy()
    n = state.n_agents
    n_opp = n - 1
    n_items = state.n_items
    max_steps = world_cfg.max_steps

    type_spaces = [make_type_space(state, o + 1) for o in range(n_opp)]
    estimates = instance.initial_estimates.copy()
    if method.init == "correct":
        for o in range(n_opp):
            estimates[o, instance.true_kinds[o]] = instance.true_params[o]

    posteriors = [
        [ParameterPosterior.uniform(PARAM_BOUNDS) for _ in range(N_TYPES)]
        for _ in range(n_opp)
    ]
    bandits = [BanditStats.fresh(N_TYPES) for _ in range(n_opp)]
    beliefs = [TypeBelief.uniform(N_TYPES) for _ in range(n_opp)]
    memories = np.full((n_opp, N_TYPES, 2), -1, np.int64)

    history = ForagingHistory(max_steps, n, n_items)
    history.append_state(state)

    env_rng = _stream(config.seed, instance_index, method_index, 0)
    est_rng = _stream(config.seed, instance_index, method_index, 2)
    sel_rng = _stream(config.seed, instance_index, method_index, 3)
    planner_seed = int(_stream(config.seed, instance_index, method_index, 1).integers(2**62))
    planner = UctPlanner(config.planner_config(), max_steps, planner_seed)
    opp_rng = K.seed_rng(int(env_rng.integers(2**62)))

    true_mem = np.full((n_opp, 2), -1, np.int64)
    lview_p2, lview_p3 = leader_view_arrays(instance, config.leader_view)
    opp_actions = np.empty(max(n_opp, 1), np.int64)
    order = np.empty(n, np.int64)

    trace = None
    if config.save_traces:
        trace = {
            "world": config.world,
            "method": method.name,
            "instance": instance.to_json(),
            "joint_actions": [],
            "step_seeds": [],
            "rewards": [],
        }

    rows: list[StepRow] = []
    completed = False
    t = 0
    while True:
        selected = [() for _ in range(n_opp)]
        upd_seconds = np.zeros(n_opp)
        upd_counts = np.zeros(n_opp, np.int64)

        if t > 0:
            window = history.window(t)
            for o in range(n_opp):
                observed = int(history.hacts[t - 1, o + 1])
                if method.estimator != "none":
                    phi = _select_types(method.selection, beliefs[o], bandits[o], sel_rng)
                    selected[o] = tuple(sorted(phi))
                    for k in phi:
                        prev = ParameterVector(tuple(estimates[o, k]), PARAM_BOUNDS)
                        started = time.perf_counter()
                        if method.estimator == "aga":
                            new = aga_update(type_spaces[o][k], window, observed, prev)
                        elif method.estimator == "abu":
                            posteriors[o][k], new = abu_update(
                                posteriors[o][k], type_spaces[o][k], window, observed, prev, est_rng,
                            )
                        else:
                            new = ego_update(type_spaces[o][k], window, method.ego_budget, est_rng)
                        upd_seconds[o] += time.perf_counter() - started
                        upd_counts[o] += 1
                        if method.selection == "ucb1":
                            bandits[o] = record_reward(bandits[o], k, bandit_reward(new, prev))
                        estimates[o, k] = new.as_array()
                # belief update and internal-state replay under current estimates
                likelihoods = np.empty(N_TYPES)
                for k in range(N_TYPES):
                    params = ParameterVector(tuple(estimates[o, k]), PARAM_BOUNDS)
                    dist, mem = type_spaces[o][k].replay(window, params)
                    likelihoods[k] = max(dist.prob(observed), PROB_FLOOR)
                    memories[o, k] = mem
                beliefs[o] = update_belief(beliefs[o], likelihoods)

        for o in range(n_opp):
            err = np.abs(estimates[o, instance.true_kinds[o]] - instance.true_params[o])
            per_update = upd_seconds[o] / upd_counts[o] if upd_counts[o] else 0.0
            rows.append(StepRow(
                t, o, beliefs[o].prob(int(instance.true_kinds[o])), err, selected[o], per_update,
            ))

        if state.remaining_items() == 0:
            completed = True
            break
        if t >= max_steps:
            break

        stacked = np.stack([b.probs for b in beliefs]) if n_opp else np.zeros((0, N_TYPES))
        my_action = planner.plan(state, stacked, estimates, memories)
        if n_opp:
            K.opponents_act(
                instance.true_kinds, instance.true_params, true_mem, lview_p2, lview_p3,
                state.rows, state.cols, state.headings, state.levels,
                state.item_rows, state.item_cols, state.item_levels, state.collected,
                state.width, state.height, opp_rng, opp_actions,
            )
        joint = np.empty(n, np.int64)
        joint[0] = my_action
        joint[1:] = opp_actions[:n_opp]
        step_seed = int(env_rng.integers(2**62))
        reward = int(K.world_step(
            state.width, state.height, state.rows, state.cols, state.headings, state.levels,
            state.item_rows, state.item_cols, state.item_levels, state.collected,
            joint, K.seed_rng(step_seed), order,
        ))
        state.step += 1
        history.append_actions(joint)
        history.append_state(state)
        planner.advance(my_action, state)
        if trace is not None:
            trace["joint_actions"].append(joint.tolist())
            trace["step_seeds"].append(step_seed)
            trace["rewards"].append(reward)
        t += 1

    return EpisodeRecord(instance_index, completed, t, rows, trace)


def _select_types(selection: str, belief: TypeBelief, bandit: BanditStats, rng) -> set[int]:
    if selection == "all":
        return select_all(len(belief.probs))
    if selection == "posterior":
        return select_posterior(belief, rng)
    return select_ucb1(bandit)


def run_baseline(instance: Instance, config: ExperimentConfig, kind: str,
                 instance_index: int = 0, method_index: int = 0) -> EpisodeRecord:
    """Fixed-estimate episode: random guesses (rnd) or true-type values (cor)."""
    if kind not in ("rnd", "cor"):
        raise ValueError("baseline kind must be 'rnd' or 'cor'")
    method = MethodSpec.rnd() if kind == "rnd" else MethodSpec.cor()
    return run_episode(instance, method, config, instance_index, method_index)


def _episode_task(payload: tuple[dict, int, int]) -> tuple[int, int, EpisodeRecord]:
    """Picklable unit of work: one (method, instance) episode.

    The instance is regenerated from its seed so workers carry no shared
    state and results do not depend on the degree of parallelism.
    """
    config_json, m_idx, i = payload
    config = ExperimentConfig.from_json(config_json)
    instance = generate_instance(
        config.world_config(), np.random.SeedSequence([config.seed, i])
    )
    return m_idx, i, run_episode(instance, config.methods[m_idx], config, i, m_idx)


def run_batch(config: ExperimentConfig) -> dict:
    """Run every method over the same generated instance sequence.

    Episodes are independent seed-isolated jobs; with ``config.jobs > 1``
    they run in a process pool, and results are sorted by instance index
    before aggregation so output is identical either way. Returns the
    aggregate summary; when ``config.out`` is set, also writes
    ``<out>/<method>/per_step.csv``, ``<out>/<method>/episodes.csv``,
    optional traces, and ``<out>/summary.json``.
    """
    if config.instances < 1:
        raise ValueError("need at least one instance")
    config_json = config.to_json()
    tasks = [
        (config_json, m_idx, i)
        for m_idx in range(len(config.methods))
        for i in range(config.instances)
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_episode_task, tasks))
    else:
        results = [_episode_task(t) for t in tasks]

    out_dir = Path(config.out) if config.out else None
    summary = {"config": config_json, "methods": {}}
    for m_idx, method in enumerate(config.methods):
        records = sorted(
            (rec for mi, _, rec in results if mi == m_idx),
            key=lambda rec: rec.instance_index,
        )
        summary["methods"][method.name] = aggregate_records(records)
        if out_dir is not None:
            _write_method_outputs(out_dir / method.name, records)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
    return summary


def aggregate_records(records: list[EpisodeRecord]) -> dict:
    """Batch-level aggregates: completion, steps, error/belief curves, timing."""
    completed = [r for r in records if r.completed]
    steps = np.array([r.steps for r in completed], dtype=float)
    max_step = max((row.step for r in records for row in r.rows), default=0)
    err_sums = np.zeros((max_step + 1, 3))
    err_counts = np.zeros(max_step + 1)
    belief_sums = np.zeros(max_step + 1)
    # episodes end at different steps, so belief near the end is also
    # aggregated by distance from each episode's final step
    end_sums = np.zeros(max_step + 1)
    end_counts = np.zeros(max_step + 1)
    update_times = []
    final_beliefs = []
    for rec in records:
        last_step = max(row.step for row in rec.rows)
        for row in rec.rows:
            err_sums[row.step] += row.err
            err_counts[row.step] += 1
            belief_sums[row.step] += row.belief_true_type
            end_sums[last_step - row.step] += row.belief_true_type
            end_counts[last_step - row.step] += 1
            if row.selected:
                update_times.append(row.update_seconds)
            if row.step == last_step:
                final_beliefs.append(row.belief_true_type)
    counts = np.maximum(err_counts, 1)
    return {
        "episodes": len(records),
        "completion_rate": len(completed) / len(records),
        "steps_mean": float(steps.mean()) if steps.size else None,
        "steps_std": float(steps.std()) if steps.size else None,
        "mean_error_by_step": {
            f"p{k + 1}": (err_sums[:, k] / counts).tolist() for k in range(3)
        },
        "mean_belief_true_type_by_step": (belief_sums / counts).tolist(),
        "mean_belief_true_type_from_end": (end_sums / np.maximum(end_counts, 1)).tolist(),
        "rows_by_step": err_counts.tolist(),
        "final_belief_true_type_mean": float(np.mean(final_beliefs)) if final_beliefs else None,
        "mean_update_seconds": float(np.mean(update_times)) if update_times else None,
    }


def _write_method_outputs(method_dir: Path, records: list[EpisodeRecord]):
    method_dir.mkdir(parents=True, exist_ok=True)
    with open(method_dir / "per_step.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PER_STEP_COLUMNS)
        for rec in records:
            for row in rec.rows:
                writer.writerow([
                    rec.instance_index, row.step, row.agent,
                    repr(row.belief_true_type),
                    repr(float(row.err[0])), repr(float(row.err[1])), repr(float(row.err[2])),
                    ";".join(str(k) for k in row.selected),
                    repr(row.update_seconds),
                ])
    with open(method_dir / "episodes.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EPISODE_COLUMNS)
        for rec in records:
            writer.writerow([rec.instance_index, int(rec.completed), rec.steps])
    traces = [r.trace for r in records if r.trace is not None]
    if traces:
        trace_dir = method_dir / "traces"
        trace_dir.mkdir(exist_ok=True)
        for rec in records:
            if rec.trace is not None:
                with open(trace_dir / f"instance_{rec.instance_index:04d}.json", "w") as fh:
                    json.dump(rec.trace, fh)


def replay_trace(trace: dict):
    """Re-simulate a recorded episode; yields (step, state, reward) triples."""
    instance = Instance.from_json(trace["instance"])
    state = instance.state.copy()
    order = np.empty(state.n_agents, np.int64)
    yield 0, state.copy(), 0
    for i, (joint, seed) in enumerate(zip(trace["joint_actions"], trace["step_seeds"])):
        reward = int(K.world_step(
            state.width, state.height, state.rows, state.cols, state.headings, state.levels,
            state.item_rows, state.item_cols, state.item_levels, state.collected,
            np.asarray(joint, np.int64), K.seed_rng(seed), order,
        ))
        state.step += 1
        yield i + 1, state.copy(), reward
