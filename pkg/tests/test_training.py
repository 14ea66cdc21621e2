"""Tests for the training orchestration: weight schedule, label enhancement,
critic freezing, best-policy tracking, reward-target hygiene, divergence
guard, baselines, and the epoch CSV schema.

Training-dynamics trends (precision/recall orderings across methods) live in
the acceptance suite; these tests pin the mechanics.
"""

import numpy as np
import pytest

from mlpac import learners, net
from mlpac.data import PartialDataset, generate_multilabel, mask_positives
from mlpac.exceptions import ConfigurationError, InputError, NumericError
from mlpac.net import DenseModel, model_to_flat
from mlpac.rewards import RewardSpec
from mlpac.training import (
    CSV_COLUMNS,
    TrainConfig,
    enhance_labels,
    evaluate_policy,
    pretrain,
    reward_weight,
    run_baseline,
    run_mlpac,
    run_self_training,
    split_train_val,
    validation_eval,
    write_epoch_csv,
)


def _bias_model(d, probabilities):
    """Model ignoring its features, emitting fixed per-class probabilities."""
    p = np.asarray(probabilities, dtype=float)
    logits = np.log(p) - np.log(1.0 - p)
    return DenseModel((np.zeros((d, p.size)),), (logits,))


def _toy_partial(seed=0, n=120, d=5, c=4):
    full = generate_multilabel(
        n=n, d=d, num_classes=c, positive_rate=0.2, cluster_spread=0.3, seed=seed
    )
    return mask_positives(full, 0.5, seed=seed)


def _fast_config(**overrides):
    base = dict(
        hidden_dims=(8,),
        total_epochs=4,
        iterative_epochs=2,
        pretrain_epochs=1,
        sample_steps=4,
        policy_lr=0.2,
        critic_lr=0.5,
        batch_size=32,
        seed=0,
        baseline_epochs=5,
    )
    base.update(overrides)
    return TrainConfig(**base)


class TestTrainConfig:
    def test_iterative_exceeding_total_rejected(self):
        with pytest.raises(ConfigurationError):
            TrainConfig(total_epochs=5, iterative_epochs=6)

    def test_threshold_bounds(self):
        with pytest.raises(ConfigurationError):
            TrainConfig(enhance_threshold=0.0)
        with pytest.raises(ConfigurationError):
            TrainConfig(enhance_threshold=1.5)
        TrainConfig(enhance_threshold=1.0)

    def test_sample_steps_positive(self):
        with pytest.raises(ConfigurationError):
            TrainConfig(sample_steps=0)

    def test_reward_kind_checked(self):
        with pytest.raises(ConfigurationError):
            TrainConfig(global_reward_kind="accuracy")

    def test_local_norm_checked(self):
        with pytest.raises(ConfigurationError):
            TrainConfig(local_norm="both")


class TestRewardWeight:
    def test_initial_weight(self):
        config = TrainConfig()
        assert reward_weight(0, RewardSpec(global_weight=10.0), config) == 10.0

    def test_final_epoch_is_tenth(self):
        """Linear decay lands on exactly 0.1 * w0 at the last epoch."""
        config = TrainConfig(total_epochs=30)
        w = reward_weight(29, RewardSpec(global_weight=10.0), config)
        np.testing.assert_allclose(w, 1.0, rtol=1e-12)

    def test_midpoint_value(self):
        """Epoch 15 of 30 sits near the 5.5 midpoint of the 10 -> 1 ramp."""
        config = TrainConfig(total_epochs=30)
        w = reward_weight(15, RewardSpec(global_weight=10.0), config)
        assert 5.0 <= w <= 6.0
        np.testing.assert_allclose(w, 10.0 * (1.0 - 0.9 * 15 / 29), rtol=1e-12)

    def test_monotone_decay(self):
        config = TrainConfig(total_epochs=30)
        spec = RewardSpec(global_weight=20.0)
        ws = [reward_weight(e, spec, config) for e in range(30)]
        assert all(a > b for a, b in zip(ws, ws[1:]))

    def test_constant_schedule(self):
        config = TrainConfig(total_epochs=12)
        spec = RewardSpec(global_weight=7.0, decay="constant")
        assert all(reward_weight(e, spec, config) == 7.0 for e in range(12))

    def test_single_epoch_run(self):
        config = TrainConfig(total_epochs=1, iterative_epochs=1)
        assert reward_weight(0, RewardSpec(global_weight=5.0), config) == 5.0

    def test_epoch_out_of_range(self):
        config = TrainConfig(total_epochs=10, iterative_epochs=5)
        with pytest.raises(InputError):
            reward_weight(10, RewardSpec(), config)
        with pytest.raises(InputError):
            reward_weight(-1, RewardSpec(), config)


class TestEnhanceLabels:
    def _data(self, observed):
        observed = np.asarray(observed)
        return PartialDataset(
            features=np.zeros((observed.shape[0], 2)),
            observed=observed,
            annotation_ratio=0.5,
            seed=0,
            class_names=[f"class_{c:02d}" for c in range(observed.shape[1])],
        )

    def test_superset_of_observed(self):
        rng = np.random.default_rng(0)
        for trial in range(100):
            observed = (rng.random((6, 3)) < 0.3).astype(int)
            data = self._data(observed)
            policy = _bias_model(2, rng.uniform(0.05, 0.99, size=3))
            critic = _bias_model(2, rng.uniform(0.05, 0.99, size=3))
            gamma = float(rng.uniform(0.3, 1.0))
            enhanced = enhance_labels(policy, critic, data, gamma)
            assert np.all(enhanced >= observed)

    def test_gamma_one_adds_nothing(self):
        """Probabilities are clamped below 1, so no cell clears gamma = 1."""
        observed = np.array([[1, 0], [0, 0]])
        data = self._data(observed)
        policy = _bias_model(2, [0.999, 0.999])
        critic = _bias_model(2, [0.999, 0.999])
        np.testing.assert_array_equal(
            enhance_labels(policy, critic, data, 1.0), observed
        )

    def test_confident_agreement_adds_cells(self):
        observed = np.array([[0, 0], [1, 0]])
        data = self._data(observed)
        policy = _bias_model(2, [0.98, 0.3])
        critic = _bias_model(2, [0.9, 0.9])
        enhanced = enhance_labels(policy, critic, data, 0.95)
        np.testing.assert_array_equal(enhanced, [[1, 0], [1, 0]])

    def test_critic_veto_blocks_enhancement(self):
        """Policy confidence 0.97 > gamma alone is not enough: the critic
        predicting FALSE keeps the cell unknown."""
        observed = np.zeros((3, 2), dtype=int)
        data = self._data(observed)
        policy = _bias_model(2, [0.97, 0.97])
        critic = _bias_model(2, [0.2, 0.2])
        np.testing.assert_array_equal(
            enhance_labels(policy, critic, data, 0.95), observed
        )

    def test_threshold_validated(self):
        data = self._data(np.zeros((1, 2), dtype=int))
        policy = _bias_model(2, [0.5, 0.5])
        with pytest.raises(ConfigurationError):
            enhance_labels(policy, policy, data, 0.0)


class TestValidationEval:
    def test_perfect_observed_prediction(self):
        observed = np.array([[1, 0], [0, 1]])
        val = PartialDataset(
            features=np.array([[1.0], [-1.0]]),
            observed=observed,
            annotation_ratio=1.0,
            seed=0,
            class_names=["a", "b"],
        )
        # Weights chosen so the sign of the single feature decides the class.
        policy = DenseModel((np.array([[8.0, -8.0]]),), (np.zeros(2),))
        assert validation_eval(policy, val) == 1.0

    def test_all_negative_scores_zero(self):
        val = _toy_partial().subset(np.arange(30))
        policy = _bias_model(val.d, np.full(val.num_classes, 0.1))
        assert validation_eval(policy, val) == 0.0


class TestPretrain:
    def test_zero_epochs_returns_inits(self):
        data = _toy_partial()
        config = _fast_config(pretrain_epochs=0)
        dims = [data.d, 8, data.num_classes]
        policy, critic = pretrain(dims, data, config)
        np.testing.assert_array_equal(
            model_to_flat(policy), model_to_flat(net.init_model(dims, [0, 0]))
        )
        np.testing.assert_array_equal(
            model_to_flat(critic), model_to_flat(net.init_model(dims, [0, 1]))
        )

    def test_trains_both_networks(self):
        data = _toy_partial()
        config = _fast_config()
        dims = [data.d, 8, data.num_classes]
        policy, critic = pretrain(dims, data, config)
        assert not np.array_equal(
            model_to_flat(policy), model_to_flat(net.init_model(dims, [0, 0]))
        )
        assert not np.array_equal(
            model_to_flat(critic), model_to_flat(net.init_model(dims, [0, 1]))
        )

    def test_deterministic(self):
        data = _toy_partial()
        config = _fast_config()
        dims = [data.d, 8, data.num_classes]
        p1, c1 = pretrain(dims, data, config)
        p2, c2 = pretrain(dims, data, config)
        np.testing.assert_array_equal(model_to_flat(p1), model_to_flat(p2))
        np.testing.assert_array_equal(model_to_flat(c1), model_to_flat(c2))

    def test_shared_init_option(self):
        data = _toy_partial()
        config = _fast_config(pretrain_epochs=0, share_init=True)
        dims = [data.d, 8, data.num_classes]
        policy, critic = pretrain(dims, data, config)
        np.testing.assert_array_equal(model_to_flat(policy), model_to_flat(critic))


class TestRunMlpac:
    def _split(self, seed=0):
        return split_train_val(_toy_partial(seed=seed), 0.25)

    def test_deterministic_end_to_end(self):
        train, val = self._split()
        config = _fast_config()
        r1 = run_mlpac(train, val, config)
        r2 = run_mlpac(train, val, config)
        np.testing.assert_array_equal(
            model_to_flat(r1.best_policy), model_to_flat(r2.best_policy)
        )
        assert r1.records == r2.records
        assert r1.best_epoch == r2.best_epoch

    def test_record_schema_and_phases(self):
        train, val = self._split()
        config = _fast_config()
        result = run_mlpac(train, val, config)
        assert len(result.records) == 1 + config.total_epochs
        assert result.records[0].phase == "pretrain"
        assert result.records[0].epoch == -1
        phases = [r.phase for r in result.records[1:]]
        assert phases == ["iterative"] * 2 + ["policy_only"] * 2
        ws = [r.w for r in result.records[1:]]
        assert ws[0] == config.reward.global_weight
        assert all(a > b for a, b in zip(ws, ws[1:]))

    def test_best_score_is_recorded_maximum(self):
        train, val = self._split()
        result = run_mlpac(train, val, _fast_config(total_epochs=6, iterative_epochs=3))
        scores = [r.val_score for r in result.records]
        assert result.best_val_score == max(scores)
        first_best = next(r.epoch for r in result.records if r.val_score == max(scores))
        assert result.best_epoch == first_best

    def test_critic_frozen_after_iterative_phase(self):
        """The final critic equals the critic at the freeze boundary: running
        only the iterative epochs reproduces it bit for bit."""
        train, val = self._split()
        long = run_mlpac(train, val, _fast_config(total_epochs=5, iterative_epochs=2))
        short = run_mlpac(train, val, _fast_config(total_epochs=2, iterative_epochs=2))
        np.testing.assert_array_equal(
            model_to_flat(long.final_critic), model_to_flat(short.final_critic)
        )

    def test_iterate_critic_off_keeps_pretrained_critic(self):
        train, val = self._split()
        config = _fast_config(iterate_critic=False)
        result = run_mlpac(train, val, config)
        _, critic0 = pretrain([train.d, 8, train.num_classes], train, config)
        np.testing.assert_array_equal(
            model_to_flat(result.final_critic), model_to_flat(critic0)
        )

    def test_recall_targets_are_original_observations(self):
        """The instrumentation hook sees exactly the original observed rows,
        never enhanced ones, in every epoch and batch."""
        train, val = self._split()
        config = _fast_config(enhance_threshold=0.55)
        seen = []

        def hook(epoch, rows, targets):
            seen.append((epoch, rows.copy(), targets.copy()))

        run_mlpac(train, val, config, recall_target_hook=hook)
        assert len(seen) > 0
        for _, rows, targets in seen:
            np.testing.assert_array_equal(targets, train.observed[rows])

    def test_no_rewards_leaves_policy_unmoved(self):
        """Local off plus global none: every reward is zero, so REINFORCE
        steps are exact no-ops and the best policy is the pretrained one."""
        train, val = self._split()
        config = _fast_config(use_local_reward=False, global_reward_kind="none")
        result = run_mlpac(train, val, config)
        policy0, _ = pretrain([train.d, 8, train.num_classes], train, config)
        np.testing.assert_array_equal(
            model_to_flat(result.best_policy), model_to_flat(policy0)
        )
        assert all(r.mean_reward == 0.0 for r in result.records[1:])

    def test_enhancement_off_keeps_observed_count(self):
        train, val = self._split()
        config = _fast_config(use_enhancement=False)
        result = run_mlpac(train, val, config)
        observed = int(train.observed.sum())
        assert all(r.enhanced_count == observed for r in result.records)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_guard_names_epoch(self):
        train, val = self._split()
        config = _fast_config(policy_lr=float("inf"))
        with pytest.raises(NumericError, match="epoch 0"):
            run_mlpac(train, val, config)

    def test_dimension_mismatch_rejected(self):
        train, val = self._split()
        bad_val = PartialDataset(
            features=val.features[:, :3],
            observed=val.observed,
            annotation_ratio=val.annotation_ratio,
            seed=val.seed,
            class_names=val.class_names,
        )
        with pytest.raises(InputError):
            run_mlpac(train, bad_val, _fast_config())

    def test_positive_fraction_nondecreasing_in_global_weight(self):
        """A larger recall weight can only push the policy toward predicting
        more positives: the fraction of +1 predictions is nondecreasing in w."""
        full = generate_multilabel(
            n=400, d=8, num_classes=5, positive_rate=0.15, cluster_spread=0.3, seed=3
        )
        train, val = split_train_val(mask_positives(full, 0.3, seed=3), 0.2)
        for seed in (0, 1):
            fractions = []
            for w in (1.0, 10.0, 100.0):
                config = TrainConfig(
                    hidden_dims=(16,),
                    total_epochs=8,
                    iterative_epochs=3,
                    pretrain_epochs=2,
                    sample_steps=6,
                    policy_lr=0.2,
                    critic_lr=0.5,
                    batch_size=32,
                    seed=seed,
                    reward=RewardSpec(global_weight=w, decay="constant"),
                )
                result = run_mlpac(train, val, config)
                preds = learners.policy_predict(result.best_policy, train.features)
                fractions.append(float(np.mean(preds == 1)))
            assert all(a <= b for a, b in zip(fractions, fractions[1:])), fractions

    def test_checkpoint_written_on_best(self, tmp_path):
        train, val = self._split()
        path = tmp_path / "ckpt.json"
        result = run_mlpac(train, val, _fast_config(), checkpoint_path=path)
        stored = net.load_model(path)
        np.testing.assert_array_equal(
            model_to_flat(stored), model_to_flat(result.best_policy)
        )


class TestRunBaseline:
    def test_variant_tag_recorded(self):
        train, val = split_train_val(_toy_partial(), 0.25)
        for variant in ("negative_mode", "pos_weight", "neg_weight"):
            result = run_baseline(train, val, variant, _fast_config(baseline_epochs=2))
            assert result.method == variant

    def test_unknown_variant(self):
        train, val = split_train_val(_toy_partial(), 0.25)
        with pytest.raises(ConfigurationError):
            run_baseline(train, val, "oracle", _fast_config())

    def test_deterministic(self):
        train, val = split_train_val(_toy_partial(), 0.25)
        config = _fast_config(baseline_epochs=3)
        r1 = run_baseline(train, val, "negative_mode", config)
        r2 = run_baseline(train, val, "negative_mode", config)
        np.testing.assert_array_equal(
            model_to_flat(r1.best_policy), model_to_flat(r2.best_policy)
        )
        assert r1.records == r2.records

    def test_record_phases(self):
        train, val = split_train_val(_toy_partial(), 0.25)
        result = run_baseline(train, val, "pos_weight", _fast_config(baseline_epochs=3))
        assert all(r.phase == "supervised" for r in result.records)
        assert len(result.records) == 1 + 3


class TestRunSelfTraining:
    def test_runs_and_tags(self):
        train, val = split_train_val(_toy_partial(), 0.25)
        result = run_self_training(train, val, _fast_config())
        assert result.method == "self_training"
        assert all(r.phase == "self_training" for r in result.records)
        assert all(
            r.enhanced_count >= int(train.observed.sum()) for r in result.records
        )


class TestEpochCsv:
    def test_schema_and_determinism(self, tmp_path):
        train, val = split_train_val(_toy_partial(), 0.25)
        result = run_mlpac(train, val, _fast_config())
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_epoch_csv(result.records, p1)
        write_epoch_csv(result.records, p2)
        assert p1.read_bytes() == p2.read_bytes()
        lines = p1.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + len(result.records)

    def test_none_fields_serialized_empty(self, tmp_path):
        train, val = split_train_val(_toy_partial(), 0.25)
        result = run_baseline(train, val, "negative_mode", _fast_config(baseline_epochs=1))
        path = tmp_path / "b.csv"
        write_epoch_csv(result.records, path)
        first_row = path.read_text().splitlines()[1].split(",")
        w_col = CSV_COLUMNS.index("w")
        assert first_row[w_col] == ""


class TestSplitTrainVal:
    def test_sizes_and_disjointness(self):
        part = _toy_partial()
        train, val = split_train_val(part, 0.2)
        assert train.n + val.n == part.n
        assert val.n == round(part.n * 0.2)
        np.testing.assert_array_equal(
            np.vstack([train.features, val.features]), part.features
        )

    def test_fraction_bounds(self):
        part = _toy_partial()
        for bad in (0.0, 1.0, -0.2):
            with pytest.raises(ConfigurationError):
                split_train_val(part, bad)


class TestEvaluatePolicy:
    def test_without_truth_returns_nones(self):
        part = _toy_partial()
        anonymous = PartialDataset(
            features=part.features,
            observed=part.observed,
            annotation_ratio=part.annotation_ratio,
            seed=part.seed,
            class_names=part.class_names,
        )
        policy = _bias_model(part.d, np.full(part.num_classes, 0.4))
        assert evaluate_policy(policy, anonymous) == (None, None, None)
