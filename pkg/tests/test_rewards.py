"""Tests for the reward functions: clamped log-odds local rewards, the
class-subset sampler, recall/precision/F1 global rewards, and their
weighted combination.
"""

import math

import numpy as np
import pytest

from mlpac.exceptions import ConfigurationError, InputError
from mlpac.rewards import (
    RewardSpec,
    clamped_confidence,
    f1_reward,
    local_reward,
    precision_reward,
    recall_reward,
    sample_reward_classes,
    total_reward,
)


class TestLocalReward:
    def test_half_confidence_is_zero(self):
        """At p = 0.5 the log-odds are exactly zero for either action."""
        assert local_reward(0.5, 1) == 0.0
        assert local_reward(0.5, -1) == 0.0

    def test_clamp_saturation_high(self):
        """ln(0.9/0.1) = ln 9 > 1 saturates the clamp to exactly 1."""
        assert local_reward(0.9, 1) == 1.0
        assert local_reward(0.9, -1) == -1.0

    def test_moderate_confidence_value(self):
        """p = 0.6 with a positive action scores ln 1.5."""
        np.testing.assert_allclose(local_reward(0.6, 1), math.log(1.5), rtol=1e-12)

    def test_antisymmetry_exact_over_grid(self):
        """r(p, +1) == -r(p, -1) bitwise over a dense p grid."""
        p = np.linspace(1e-9, 1.0 - 1e-9, 1000)
        plus = local_reward(p, np.ones_like(p))
        minus = local_reward(p, -np.ones_like(p))
        np.testing.assert_array_equal(plus, -minus)

    def test_bounded(self):
        rng = np.random.default_rng(0)
        p = rng.uniform(0.0, 1.0, size=5000)
        r = local_reward(p, np.ones_like(p))
        assert np.all(r >= -1.0) and np.all(r <= 1.0)

    def test_monotone_in_confidence_for_positive_action(self):
        p = np.linspace(0.01, 0.99, 500)
        r = local_reward(p, np.ones_like(p))
        assert np.all(np.diff(r) >= 0.0)

    def test_extreme_probabilities_finite(self):
        """p of exactly 0 or 1 is pre-clamped, so the reward stays finite."""
        assert local_reward(0.0, 1) == -1.0
        assert local_reward(1.0, 1) == 1.0


class TestClampedConfidence:
    def test_symmetric_band(self):
        """The clamp binds exactly outside the logit band [-1, 1], i.e. for
        p outside [sigma(-1), sigma(1)]."""
        hi = 1.0 / (1.0 + math.exp(-1.0))
        np.testing.assert_allclose(clamped_confidence(hi), 1.0, rtol=1e-12)
        assert clamped_confidence(hi + 0.01) == 1.0
        assert clamped_confidence(1.0 - hi - 0.01) == -1.0


class TestSampleRewardClasses:
    def test_full_ratio_includes_everything(self):
        observed = np.array([1, 0, 0, 1, 0])
        chosen = sample_reward_classes(observed, 1.0, seed=0)
        np.testing.assert_array_equal(chosen, np.arange(5))

    def test_all_unknown_ceiling(self):
        """No positives, rho = 0.2, 10 classes: ceil(0.2 * 10) = 2 classes."""
        chosen = sample_reward_classes(np.zeros(10, dtype=int), 0.2, seed=1)
        assert chosen.size == 2

    def test_size_arithmetic_with_positives(self):
        """3 positives among 97 classes at rho = 0.4: 3 + ceil(0.4*94) = 41."""
        observed = np.zeros(97, dtype=int)
        observed[[5, 40, 90]] = 1
        chosen = sample_reward_classes(observed, 0.4, seed=2)
        assert chosen.size == 3 + math.ceil(0.4 * 94)
        assert {5, 40, 90} <= set(chosen.tolist())

    def test_positives_always_included(self):
        rng = np.random.default_rng(3)
        for trial in range(100):
            observed = (rng.random(12) < 0.3).astype(int)
            chosen = sample_reward_classes(observed, 0.25, seed=trial)
            assert set(np.flatnonzero(observed == 1).tolist()) <= set(chosen.tolist())

    def test_deterministic_per_seed(self):
        observed = np.array([0, 1, 0, 0, 0, 0, 1, 0])
        a = sample_reward_classes(observed, 0.5, seed=9)
        b = sample_reward_classes(observed, 0.5, seed=9)
        np.testing.assert_array_equal(a, b)

    def test_no_duplicates_and_sorted(self):
        observed = np.array([1, 0, 1, 0, 0, 0])
        chosen = sample_reward_classes(observed, 0.9, seed=4)
        assert np.all(np.diff(chosen) > 0)

    def test_invalid_ratio(self):
        with pytest.raises(ConfigurationError):
            sample_reward_classes(np.zeros(4, dtype=int), 0.0, seed=0)
        with pytest.raises(ConfigurationError):
            sample_reward_classes(np.zeros(4, dtype=int), 1.5, seed=0)


class TestRecallReward:
    def test_direct_count(self):
        observed = np.array([1, 0, 1, 0])
        actions = np.array([1, -1, -1, -1])
        assert recall_reward(observed, actions) == 0.5

    def test_all_positive_actions_maximize(self):
        """Predicting everything TRUE attains recall 1 whenever any positive
        is observed: the failure mode a pure global reward would invite."""
        rng = np.random.default_rng(5)
        for _ in range(50):
            observed = (rng.random(8) < 0.4).astype(int)
            if observed.sum() == 0:
                continue
            assert recall_reward(observed, np.ones(8, dtype=int)) == 1.0

    def test_no_observed_positives_scores_zero(self):
        assert recall_reward(np.zeros(6, dtype=int), np.ones(6, dtype=int)) == 0.0

    def test_flip_to_positive_never_decreases(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            observed = (rng.random(7) < 0.35).astype(int)
            actions = np.where(rng.random(7) < 0.5, 1, -1)
            base = recall_reward(observed, actions)
            flip = int(rng.integers(7))
            bumped = actions.copy()
            bumped[flip] = 1
            assert recall_reward(observed, bumped) >= base

    def test_brute_force_oracle_exact(self):
        """1000 random pairs against a literal loop-and-count reimplementation."""
        rng = np.random.default_rng(7)
        for _ in range(1000):
            c = int(rng.integers(1, 12))
            observed = (rng.random(c) < 0.4).astype(int)
            actions = np.where(rng.random(c) < 0.5, 1, -1)
            hits = sum(
                1 for k in range(c) if observed[k] == 1 and actions[k] == 1
            )
            pos = sum(1 for k in range(c) if observed[k] == 1)
            expected = 0.0 if pos == 0 else hits / pos
            assert recall_reward(observed, actions) == expected

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            recall_reward(np.zeros(3, dtype=int), np.ones(4, dtype=int))


class TestPrecisionAndF1Rewards:
    def test_precision_counts_true_actions(self):
        observed = np.array([1, 0, 0, 1])
        actions = np.array([1, 1, -1, -1])
        assert precision_reward(observed, actions) == 0.5

    def test_precision_no_predictions(self):
        assert precision_reward(np.array([1, 0]), np.array([-1, -1])) == 0.0

    def test_f1_harmonic_mean(self):
        observed = np.array([1, 1, 0, 0])
        actions = np.array([1, -1, 1, -1])
        p, r = 0.5, 0.5
        np.testing.assert_allclose(
            f1_reward(observed, actions), 2 * p * r / (p + r), rtol=1e-15
        )

    def test_f1_zero_when_both_zero(self):
        assert f1_reward(np.array([1, 0]), np.array([-1, -1])) == 0.0


class TestTotalReward:
    def test_zero_locals_full_recall(self):
        assert total_reward([0.0, 0.0], recall=1.0, weight=10.0) == 10.0

    def test_cancelling_locals(self):
        assert total_reward([1.0, -1.0], recall=0.5, weight=10.0) == 5.0

    def test_mixed_arithmetic(self):
        """Two locals {ln 1.5, 1.0}, recall 0.5, weight 7."""
        value = total_reward([0.4055, 1.0], recall=0.5, weight=7.0)
        np.testing.assert_allclose(value, 0.70275 + 3.5, rtol=1e-12)

    def test_dict_input(self):
        value = total_reward({2: 1.0, 5: -1.0, 7: 0.5}, recall=0.0, weight=3.0)
        np.testing.assert_allclose(value, 0.5 / 3.0, rtol=1e-15)

    def test_norm_count_override(self):
        """Normalizing by the full class count instead of the sampled size."""
        value = total_reward([1.0, 1.0], recall=0.0, weight=1.0, norm_count=8)
        np.testing.assert_allclose(value, 0.25, rtol=1e-15)

    def test_empty_set_rejected(self):
        with pytest.raises(InputError):
            total_reward([], recall=1.0, weight=1.0)

    def test_bounded_by_weight(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            k = int(rng.integers(1, 6))
            locals_ = rng.uniform(-1.0, 1.0, size=k)
            recall = rng.uniform(0.0, 1.0)
            w = rng.uniform(0.0, 20.0)
            value = total_reward(locals_, recall, w)
            assert -1.0 - 1e-12 <= value <= 1.0 + w + 1e-12

    def test_strictly_increasing_in_recall(self):
        locals_ = [0.3, -0.2]
        low = total_reward(locals_, 0.4, 5.0)
        high = total_reward(locals_, 0.6, 5.0)
        assert high > low


class TestRewardSpec:
    def test_defaults(self):
        spec = RewardSpec()
        assert spec.global_weight == 10.0
        assert spec.decay == "linear"
        assert spec.unknown_ratio == 0.4

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            RewardSpec(global_weight=-1.0)
        with pytest.raises(ConfigurationError):
            RewardSpec(unknown_ratio=0.0)
        with pytest.raises(ConfigurationError):
            RewardSpec(decay="exponential")
