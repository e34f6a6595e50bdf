"""Acceptance gates for the full pipeline, one printed verdict per criterion.

The batch criteria share a single 50-instance run on the small board so
every method sees identical worlds and identical initial estimates. Run
times are minutes on one core; the property battery in criterion 1 is
bounded at a minute on its own.
"""

import sys
import time
from collections import deque

import numpy as np
import pytest

from typeforage.agent_model import (
    ActionDistribution,
    HypotheticalType,
    Observation,
    ParameterVector,
)
from typeforage.beliefs import TypeBelief, update_belief
from typeforage.estimation import (
    GpSurrogate,
    ParameterPosterior,
    abu_update,
    expected_improvement,
)
from typeforage.foraging import _kernels as K
from typeforage.foraging.types import ForagingHistory, make_type_space
from typeforage.foraging.world import PARAM_BOUNDS, WorldConfig, generate_instance, step_world
from typeforage.harness import ExperimentConfig, MethodSpec, run_batch
from typeforage.polynomials import UnivariatePolynomial, fit_polynomial
from typeforage.selection import bandit_reward

BATCH_METHODS = [
    MethodSpec.rnd(),
    MethodSpec.cor(),
    MethodSpec("aga-all", estimator="aga", selection="all"),
    MethodSpec("abu-all", estimator="abu", selection="all"),
    MethodSpec("ego10-all", estimator="ego", selection="all", ego_budget=10),
    MethodSpec("ego20-all", estimator="ego", selection="all", ego_budget=20),
]


def announce(text):
    print(text, file=sys.__stdout__, flush=True)


def verdict(capsys, criterion, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="session")
def batch10():
    announce("\nrunning the shared 10x10 batch: 50 instances x 6 methods, 300 rollouts ...")
    started = time.time()
    config = ExperimentConfig(
        world="10x10", instances=50, seed=2, rollouts=300, methods=BATCH_METHODS,
    )
    summary = run_batch(config)
    announce(f"batch done in {time.time() - started:.0f}s")
    return summary["methods"]


class Bernoulli(HypotheticalType):
    """P(action 1) = p; the smallest type the updaters accept."""

    def __init__(self):
        super().__init__("bern", ((0.0, 1.0),), (True,), 0)

    def initial_state(self):
        return None

    def step(self, state, observation, params):
        p = params.values[0]
        return ActionDistribution(np.array([1.0 - p, p])), None


def bfs_distance(blocked, w, h, start, target):
    if blocked[target[0] * w + target[1]]:
        return -1
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        (r, c), d = frontier.popleft()
        if (r, c) == target:
            return d
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and (nr, nc) not in seen and not blocked[nr * w + nc]:
                seen.add((nr, nc))
                frontier.append(((nr, nc), d + 1))
    return -1


def check_beliefs():
    rng = np.random.default_rng(10)
    for _ in range(200):
        n = int(rng.integers(2, 7))
        prior = TypeBelief(rng.dirichlet(np.ones(n)))
        likelihoods = rng.uniform(1e-6, 1.0, n)
        post = update_belief(prior, likelihoods)
        if abs(post.probs.sum() - 1.0) > 1e-12:
            return False
        for scale in (0.25, 32.0, 1024.0):  # exact binary scalings
            rescaled = update_belief(prior, likelihoods * scale)
            if np.max(np.abs(rescaled.probs - post.probs)) > 1e-12:
                return False
    return True


def check_bandit_rewards():
    same = ParameterVector((0.5, 0.5, 0.5), PARAM_BOUNDS)
    if bandit_reward(same, same) != 0.0:
        return False
    full = bandit_reward(
        ParameterVector((1.0, 1.0, 1.0), PARAM_BOUNDS),
        ParameterVector((0.0, 0.1, 0.1), PARAM_BOUNDS),
    )
    if abs(full - 1.0) > 1e-12:
        return False
    nudged = bandit_reward(ParameterVector((0.8, 0.5, 0.5), PARAM_BOUNDS), same)
    if abs(nudged - 0.3 / 2.8) > 1e-12:
        return False
    rng = np.random.default_rng(11)
    for _ in range(200):
        a = ParameterVector.uniform(PARAM_BOUNDS, rng)
        b = ParameterVector.uniform(PARAM_BOUNDS, rng)
        r = bandit_reward(a, b)
        if not 0.0 <= r <= 1.0:
            return False
    return True


def check_interpolation():
    rng = np.random.default_rng(12)
    xs = np.linspace(0.0, 1.0, 5)
    for _ in range(50):
        coeffs = rng.uniform(-1.0, 1.0, 5)
        truth = UnivariatePolynomial(coeffs, 0.0, 1.0)
        fit = fit_polynomial(list(zip(xs, truth(xs))), 0.0, 1.0)
        if np.max(np.abs(fit(xs) - truth(xs))) >= 1e-9:
            return False
    return True


def check_derivatives():
    rng = np.random.default_rng(13)
    grid = np.linspace(0.05, 0.95, 21)
    h = 1e-5
    for _ in range(50):
        poly = UnivariatePolynomial(rng.uniform(-2.0, 2.0, 5), 0.0, 1.0)
        exact = poly.derivative()(grid)
        central = (poly(grid + h) - poly(grid - h)) / (2.0 * h)
        if np.max(np.abs(exact - central)) >= 1e-6:
            return False
    return True


def check_abu_normalisation():
    rng = np.random.default_rng(14)
    t = Bernoulli()
    posterior = ParameterPosterior.uniform(t.bounds)
    estimate = ParameterVector((0.5,), t.bounds)
    history = [Observation(0, None)]
    for i in range(10):
        posterior, estimate = abu_update(posterior, t, history, i % 2, estimate, rng)
        for poly in posterior.polynomials:
            if abs(poly.absolute_definite_integral() - 1.0) > 1e-6:
                return False
    return True


def check_gp_interpolation():
    rng = np.random.default_rng(15)
    bounds = ((0.0, 1.0), (0.1, 1.0))
    for _ in range(10):
        X = rng.uniform(0.1, 1.0, (6, 2))
        y = rng.normal(size=6)
        surrogate = GpSurrogate.from_bounds(X, y, bounds)
        mean, var = surrogate.posterior(X)
        if np.mean(np.abs(mean - y)) >= 1e-6 or np.max(var) > 1e-6:
            return False
    return True


def check_ei_at_zero():
    value = expected_improvement(0.0, 1.0, 0.0)
    return abs(value - 0.3989422804) < 1e-6


def check_astar_against_bfs():
    rng = np.random.default_rng(16)
    for _ in range(200):
        w = int(rng.integers(4, 13))
        h = int(rng.integers(4, 13))
        blocked = (rng.random(w * h) < rng.uniform(0.1, 0.45)).astype(np.uint8)
        cells = [(r, c) for r in range(h) for c in range(w)]
        start, target = [cells[i] for i in rng.choice(len(cells), 2, replace=False)]
        blocked[start[0] * w + start[1]] = 0
        blocked[target[0] * w + target[1]] = 0
        n_cells = w * h
        path_out = np.empty(n_cells + 1, np.int64)
        length = K.astar_path(
            blocked, w, h, start[0], start[1], target[0], target[1],
            np.empty(n_cells, np.int64), np.empty(n_cells, np.int64),
            np.empty(4 * n_cells + 8, np.int64), np.empty(4 * n_cells + 8, np.int64),
            path_out,
        )
        expected = bfs_distance(blocked, w, h, start, target)
        if length != expected and not (length == -1 and expected == -1):
            return False
    return True


def check_replay_equivalence():
    rng = np.random.default_rng(17)
    config = WorldConfig.preset("10x10")
    for _ in range(100):
        instance = generate_instance(config, np.random.SeedSequence([int(rng.integers(2**31)), 9]))
        state = instance.state.copy()
        steps = int(rng.integers(1, 6))
        history = ForagingHistory(steps, state.n_agents, state.n_items)
        history.append_state(state)
        obs = [Observation(0, history.snapshot(0))]
        for t in range(steps):
            actions = rng.integers(0, K.N_ACTIONS, size=state.n_agents)
            state, _ = step_world(state, actions.tolist(), int(rng.integers(2**31)))
            history.append_actions(actions)
            history.append_state(state)
            obs.append(Observation(t + 1, history.snapshot(t + 1), tuple(int(a) for a in actions)))
        kind = int(rng.integers(4))
        t_hyp = make_type_space(instance.state, 1)[kind]
        params = ParameterVector.uniform(PARAM_BOUNDS, rng)
        window = history.window(steps)
        fast = t_hyp.action_probabilities(window, params)
        slow = t_hyp.action_probabilities(obs[:steps], params)
        if not np.array_equal(fast.probs, slow.probs):
            return False
        if t_hyp.replayed_state(window, params) != t_hyp.replayed_state(obs[:steps], params):
            return False
    return True


class TestCriterion1:
    def test_property_battery_under_a_minute(self, capsys):
        started = time.time()
        checks = [
            ("belief normalisation and rescaling", check_beliefs),
            ("bandit reward bounds and hand values", check_bandit_rewards),
            ("degree-4 interpolation", check_interpolation),
            ("polynomial derivatives", check_derivatives),
            ("posterior normalisation", check_abu_normalisation),
            ("gp interpolation", check_gp_interpolation),
            ("expected improvement at zero gap", check_ei_at_zero),
            ("pathfinding vs breadth-first search", check_astar_against_bfs),
            ("history replay equivalence", check_replay_equivalence),
        ]
        failures = [label for label, check in checks if not check()]
        elapsed = time.time() - started
        ok = not failures and elapsed < 60.0
        detail = f"9 property groups, {elapsed:.1f}s"
        if failures:
            detail += f"; failed: {', '.join(failures)}"
        verdict(capsys, 1, ok, detail)


class TestCriterion2:
    def test_completion_rates(self, capsys, batch10):
        comp = {name: agg["completion_rate"] for name, agg in batch10.items()}
        gap = comp["cor"] - comp["rnd"]
        conditions = [gap >= 0.15]
        for name in ("aga-all", "abu-all", "ego10-all"):
            conditions.append(comp[name] >= comp["rnd"] - 0.05)
            conditions.append(comp[name] <= comp["cor"] + 0.05)
        conditions.append(comp["ego10-all"] >= comp["aga-all"] - 0.05)
        detail = (
            f"completion rnd {comp['rnd']:.2f}, cor {comp['cor']:.2f} (gap {gap:.2f}), "
            f"aga {comp['aga-all']:.2f}, abu {comp['abu-all']:.2f}, ego {comp['ego10-all']:.2f}"
        )
        verdict(capsys, 2, all(conditions), detail)


class TestCriterion3:
    def test_abu_error_drops(self, capsys, batch10):
        agg = batch10["abu-all"]
        rows = np.array(agg["rows_by_step"])
        ok = True
        parts = []
        for p in ("p1", "p2", "p3"):
            curve = np.array(agg["mean_error_by_step"][p])
            start = curve[0]
            late = float((curve[5:] * rows[5:]).sum() / rows[5:].sum())
            ok = ok and late < start
            parts.append(f"{p} {start:.3f}->{late:.3f}")
        verdict(capsys, 3, ok, "abu mean error by parameter: " + ", ".join(parts))


class TestCriterion4:
    def test_final_beliefs(self, capsys, batch10):
        fb = {name: agg["final_belief_true_type_mean"] for name, agg in batch10.items()}
        ok = fb["cor"] >= 0.9 and fb["abu-all"] > fb["rnd"] and fb["ego10-all"] > fb["rnd"]
        detail = (
            f"final belief in true type: cor {fb['cor']:.3f}, rnd {fb['rnd']:.3f}, "
            f"abu {fb['abu-all']:.3f}, ego {fb['ego10-all']:.3f}"
        )
        verdict(capsys, 4, ok, detail)


class TestCriterion5:
    def test_update_time_ordering(self, capsys, batch10):
        upd = {name: agg["mean_update_seconds"] for name, agg in batch10.items()}
        ok = (
            upd["aga-all"] <= upd["abu-all"]
            and upd["abu-all"] < upd["ego10-all"]
            and upd["ego20-all"] > upd["ego10-all"]
        )
        detail = (
            f"mean update seconds: aga {upd['aga-all']:.4f} <= abu {upd['abu-all']:.4f} "
            f"< ego10 {upd['ego10-all']:.4f} < ego20 {upd['ego20-all']:.4f}"
        )
        verdict(capsys, 5, ok, detail)


class TestCriterion6:
    def test_large_board_runs_clean(self, capsys):
        announce("\nrunning the 15x15 batch: 5 instances x 5 methods, 500 rollouts ...")
        config = ExperimentConfig(
            world="15x15", instances=5, seed=2,
            methods=[
                MethodSpec.rnd(), MethodSpec.cor(),
                MethodSpec("aga-all", estimator="aga"),
                MethodSpec("abu-all", estimator="abu"),
                MethodSpec("ego10-all", estimator="ego", ego_budget=10),
            ],
        )
        try:
            summary = run_batch(config)["methods"]
        except Exception as exc:  # pragma: no cover - failure path
            verdict(capsys, 6, False, f"15x15 batch raised {exc!r}")
            raise
        ok = all(agg["episodes"] == 5 for agg in summary.values())
        ok = ok and all(0.0 <= agg["completion_rate"] <= 1.0 for agg in summary.values())
        comp = ", ".join(f"{n} {agg['completion_rate']:.2f}" for n, agg in summary.items())
        verdict(capsys, 6, ok, f"15x15 x5 instances completed; rates: {comp}")
