"""Core protocol: distributions, parameter vectors, replay semantics."""

import numpy as np
import pytest

from typeforage.agent_model import (
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


class StickyCoin(HypotheticalType):
    """Two-action toy whose memory is the count of past heads.

    P(action 1) = clip(p + 0.05 * heads_seen, 0, 1), so the internal state
    depends on the whole history and the parameter is non-Markovian in
    effect: re-estimating p changes nothing retroactively, but the replayed
    count must match the raw history.
    """

    def __init__(self, agent_index=0):
        super().__init__("sticky-coin", ((0.0, 1.0),), (False,), agent_index)

    def initial_state(self):
        return 0

    def step(self, state, observation, params):
        heads = state
        if observation.prev_actions is not None and observation.prev_actions[self.agent_index] == 1:
            heads += 1
        p = min(max(params.values[0] + 0.05 * heads, 0.0), 1.0)
        return ActionDistribution(np.array([1.0 - p, p])), heads


def coin_history(actions):
    obs = [Observation(0, None)]
    for t, a in enumerate(actions):
        obs.append(Observation(t + 1, None, (a,)))
    return obs


class TestActionDistribution:
    def test_validates_sum(self):
        with pytest.raises(ValueError):
            ActionDistribution(np.array([0.5, 0.6]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            ActionDistribution(np.array([1.2, -0.2]))

    def test_prob_and_sample(self):
        dist = ActionDistribution(np.array([0.0, 1.0, 0.0]))
        assert dist.prob(1) == 1.0
        rng = np.random.default_rng(0)
        assert all(dist.sample(rng) == 1 for _ in range(20))

    def test_sample_frequencies(self):
        dist = ActionDistribution(np.array([0.25, 0.75]))
        rng = np.random.default_rng(7)
        draws = [dist.sample(rng) for _ in range(4000)]
        assert abs(np.mean(draws) - 0.75) < 0.03


class TestParameterVector:
    def test_bounds_checked(self):
        with pytest.raises(BoundsViolation):
            ParameterVector((1.5,), ((0.0, 1.0),))

    def test_clamped(self):
        pv = ParameterVector((0.5, 0.5), ((0.0, 1.0), (0.0, 1.0)))
        assert pv.clamped((-3.0, 0.7)).values == (0.0, 0.7)

    def test_with_value(self):
        pv = ParameterVector((0.2, 0.3), ((0.0, 1.0), (0.0, 1.0)))
        assert pv.with_value(1, 0.9).values == (0.2, 0.9)
        assert pv.values == (0.2, 0.3)

    def test_uniform_within_bounds(self):
        bounds = ((0.1, 0.2), (5.0, 6.0))
        rng = np.random.default_rng(1)
        for _ in range(50):
            pv = ParameterVector.uniform(bounds, rng)
            for v, (lo, hi) in zip(pv.values, bounds):
                assert lo <= v <= hi


class TestObservation:
    def test_first_step_needs_no_actions(self):
        Observation(0, None)

    def test_later_steps_require_actions(self):
        with pytest.raises(ValueError):
            Observation(3, None)


class TestReplay:
    def test_action_probabilities_match_manual_walk(self):
        coin = StickyCoin()
        params = ParameterVector((0.3,), coin.bounds)
        history = coin_history([1, 0, 1])
        state = coin.initial_state()
        dist = None
        for obs in history:
            dist, state = coin.step(state, obs, params)
        got = action_probabilities(coin, history, params)
        assert np.array_equal(got.probs, dist.probs)
        replayed = replay_internal_state(coin, history, params)
        assert replayed.state == state == 2

    def test_log_likelihood_scores_each_action_against_prior_dist(self):
        coin = StickyCoin()
        params = ParameterVector((0.4,), coin.bounds)
        history = coin_history([1, 1, 0])
        # dists seen before each action: p, p+0.05, p+0.10
        expected = np.log(0.4) + np.log(0.45) + np.log(1.0 - 0.5)
        got = history_log_likelihood(coin, history, params)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_replay_reflects_new_params_over_whole_history(self):
        # Changing p rewrites every step of the replay, not just the last.
        coin = StickyCoin()
        history = coin_history([1, 0, 1, 1])
        lo = history_log_likelihood(coin, history, ParameterVector((0.1,), coin.bounds))
        hi = history_log_likelihood(coin, history, ParameterVector((0.7,), coin.bounds))
        assert hi > lo

    def test_bounds_enforced_on_evaluation(self):
        coin = StickyCoin()
        bad = ParameterVector((0.5, 0.5), ((0.0, 1.0), (0.0, 1.0)))
        with pytest.raises(BoundsViolation):
            check_bounds(coin, bad)
        with pytest.raises(BoundsViolation):
            action_probabilities(coin, coin_history([1]), bad)

    def test_empty_history_rejected(self):
        coin = StickyCoin()
        with pytest.raises(ValueError):
            action_probabilities(coin, [], ParameterVector((0.5,), coin.bounds))
