"""End-to-end training loops.

``run_mlpac`` drives the full procedure: supervised pretraining of policy
and critic (negative mode, deliberately short of convergence), then per
epoch an interleaved pass over batches - critic descent on the enhanced
label set while the critic is still live, action sampling and a REINFORCE
ascent step for the policy - followed by label enhancement, validation
scoring and best-checkpoint tracking. The critic freezes once the
iterative phase ends. ``run_baseline`` trains the purely supervised
variants (negative mode and its re-weighted cousins) on the same result
schema, and ``run_self_training`` covers the self-training ablation.

Reproducibility: every random draw comes from a generator keyed by
(run seed, purpose, epoch, batch), so identical configs give identical
results bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import learners, metrics, net, rewards
from .data import PartialDataset
from .exceptions import ConfigurationError, InputError, NumericError
from .learners import CriticMode, SampledRollout
from .net import DenseModel
from .rewards import RewardSpec

# Stream tags for seed derivation; never reuse across purposes.
_S_POLICY_INIT = 0
_S_CRITIC_INIT = 1
_S_SHUFFLE = 2
_S_ACTIONS = 3
_S_REWARD_CLASSES = 4
_S_NEG_SAMPLE = 5
_S_BASELINE_INIT = 7

GLOBAL_REWARD_KINDS = ("recall", "precision", "f1", "none")
BASELINE_VARIANTS = ("negative_mode", "pos_weight", "neg_weight")


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run needs besides the data.

    ``sample_steps`` is the number of action vectors drawn per instance and
    batch visit; ``policy_lr`` the REINFORCE ascent step; ``enhance_threshold``
    the policy-confidence bar a cell must clear (together with policy/critic
    agreement) to become an enhanced positive.
    """

    hidden_dims: tuple = (32,)
    total_epochs: int = 30
    iterative_epochs: int = 10
    pretrain_epochs: int = 3
    sample_steps: int = 10
    policy_lr: float = 0.2
    critic_lr: float = 1.0
    enhance_threshold: float = 0.95
    reward: RewardSpec = field(default_factory=RewardSpec)
    batch_size: int = 64
    seed: int = 0
    global_reward_kind: str = "recall"
    use_local_reward: bool = True
    use_enhancement: bool = True
    iterate_critic: bool = True
    # Loss weighting for the critic's updates on enhanced labels. The
    # positive-reweighted mode lets the critic's confidence rise above 0.5 on
    # sparsely annotated positives, which is what lets enhancement bootstrap.
    critic_update_mode: str = "pos_weight"
    local_norm: str = "sampled"  # or "all_classes": divide by |C| instead of |S|
    momentum: float = 0.0
    use_reward_baseline: bool = False
    share_init: bool = False
    baseline_epochs: int = 60
    validation_metric: str = "f1_vs_observed"

    def __post_init__(self):
        if self.iterative_epochs > self.total_epochs:
            raise ConfigurationError(
                f"iterative_epochs {self.iterative_epochs} > total_epochs {self.total_epochs}"
            )
        if not 0.0 < self.enhance_threshold <= 1.0:
            raise ConfigurationError(
                f"enhance_threshold must be in (0, 1], got {self.enhance_threshold}"
            )
        if self.sample_steps < 1:
            raise ConfigurationError(f"sample_steps must be >= 1, got {self.sample_steps}")
        if self.pretrain_epochs < 0:
            raise ConfigurationError(f"pretrain_epochs must be >= 0, got {self.pretrain_epochs}")
        if self.global_reward_kind not in GLOBAL_REWARD_KINDS:
            raise ConfigurationError(
                f"global_reward_kind must be one of {GLOBAL_REWARD_KINDS}, got {self.global_reward_kind!r}"
            )
        if self.local_norm not in ("sampled", "all_classes"):
            raise ConfigurationError(f"local_norm must be 'sampled' or 'all_classes'")
        if self.critic_update_mode not in ("plain", "pos_weight"):
            raise ConfigurationError(
                f"critic_update_mode must be 'plain' or 'pos_weight', got {self.critic_update_mode!r}"
            )
        if self.validation_metric != "f1_vs_observed":
            raise ConfigurationError(
                f"unsupported validation_metric {self.validation_metric!r}"
            )


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    phase: str  # pretrain | iterative | policy_only | supervised | self_training
    w: float
    mean_reward: float
    val_score: float
    test_p: float
    test_r: float
    test_f1: float
    enhanced_count: int


@dataclass(frozen=True)
class TrainResult:
    method: str
    best_policy: DenseModel
    final_critic: DenseModel
    records: list
    best_epoch: int  # -1 means the pretrained policy was never beaten
    best_val_score: float

    @property
    def final_test_prf1(self):
        last = self.records[-1]
        return last.test_p, last.test_r, last.test_f1


CSV_COLUMNS = [
    "epoch", "phase", "w", "mean_reward", "val_score",
    "test_P", "test_R", "test_F1", "enhanced_count",
]


def write_epoch_csv(records, path) -> None:
    """Write per-epoch records with a stable schema and deterministic bytes."""

    def fmt(value):
        return "" if value is None else str(value)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                r.epoch, r.phase, fmt(r.w), fmt(r.mean_reward), fmt(r.val_score),
                fmt(r.test_p), fmt(r.test_r), fmt(r.test_f1), r.enhanced_count,
            ])


def reward_weight(epoch: int, spec: RewardSpec, config: TrainConfig) -> float:
    """Global-reward weight at a given epoch.

    The linear schedule drops from the initial weight to a tenth of it by
    the final epoch; "constant" keeps it fixed.
    """
    if not 0 <= epoch < config.total_epochs:
        raise InputError(f"epoch {epoch} outside 0..{config.total_epochs - 1}")
    if spec.decay == "constant" or config.total_epochs == 1:
        return spec.global_weight
    frac = epoch / (config.total_epochs - 1)
    return spec.global_weight * (1.0 - 0.9 * frac)


def enhance_labels(policy: DenseModel, critic: DenseModel, data: PartialDataset, threshold: float) -> np.ndarray:
    """Enhanced {0,1} label matrix, recomputed fresh from the observations.

    A cell becomes positive iff it is observed, or the policy assigns it a
    probability above the threshold while both the policy and the critic
    predict it TRUE.
    """
    if not 0.0 < threshold <= 1.0:
        raise ConfigurationError(f"threshold must be in (0, 1], got {threshold}")
    p_pol = net.forward(policy, data.features)
    confident = (p_pol > threshold) & (p_pol > 0.5)
    agree = learners.critic_predict(critic, data.features)
    return ((data.observed == 1) | (confident & agree)).astype(int)


def validation_eval(policy: DenseModel, val: PartialDataset) -> float:
    """Proxy score: micro-F1 of policy predictions against observed positives
    (unknowns counted as negatives). Computable without full labels."""
    predictions = learners.policy_predict(policy, val.features)
    targets = np.where(val.observed == 1, 1, -1)
    return metrics.prf1(predictions, targets)[2]


def evaluate_policy(policy: DenseModel, ds: PartialDataset):
    """(P, R, F1) against the hidden ground truth; (None,)*3 if absent."""
    if ds.true_labels is None:
        return None, None, None
    predictions = learners.policy_predict(policy, ds.features)
    return metrics.prf1(predictions, ds.true_labels)


def _model_dims(data: PartialDataset, config: TrainConfig):
    return [data.d] + list(config.hidden_dims) + [data.num_classes]


def _batches(n: int, batch_size: int, rng) -> list:
    order = rng.permutation(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def _check_finite(model: DenseModel, epoch: int) -> None:
    for arr in model.weights + model.biases:
        if not np.isfinite(arr).all():
            raise NumericError(f"policy parameters became non-finite at epoch {epoch}")


def pretrain(layer_dims, data: PartialDataset, config: TrainConfig):
    """Negative-mode supervised warm start for policy and critic.

    Runs exactly ``pretrain_epochs`` epochs - deliberately short of
    convergence so the policy is biased but not collapsed.
    """
    policy = net.init_model(layer_dims, [config.seed, _S_POLICY_INIT])
    critic_init = _S_POLICY_INIT if config.share_init else _S_CRITIC_INIT
    critic = net.init_model(layer_dims, [config.seed, critic_init])
    labels = data.observed.astype(float)
    mode = CriticMode("plain")
    for epoch in range(config.pretrain_epochs):
        rng = np.random.default_rng([config.seed, _S_SHUFFLE, epoch])
        for rows in _batches(data.n, config.batch_size, rng):
            x = data.features[rows]
            policy = learners.critic_step(policy, x, labels[rows], mode, config.critic_lr)
            critic = learners.critic_step(critic, x, labels[rows], mode, config.critic_lr)
    return policy, critic


def _global_rewards(actions, observed, kind):
    """Per-sample global reward, vectorized over (batch, T, classes)."""
    pred = (actions == 1)
    hits = np.einsum("btc,bc->bt", pred.astype(float), (observed == 1).astype(float))
    if kind == "none":
        return np.zeros(actions.shape[:2])
    n_pos = (observed == 1).sum(axis=1).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        recall = np.where(n_pos[:, None] > 0, hits / n_pos[:, None], 0.0)
    if kind == "recall":
        return recall
    n_pred = pred.sum(axis=2).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(n_pred > 0, hits / n_pred, 0.0)
    if kind == "precision":
        return precision
    denom = precision + recall
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 0, 2.0 * precision * recall / denom, 0.0)


def _policy_epoch_state(policy, data, val, epoch, phase, w, mean_reward, enhanced, best):
    val_score = validation_eval(policy, val)
    test_p, test_r, test_f1 = evaluate_policy(policy, data)
    record = EpochRecord(
        epoch=epoch, phase=phase, w=w, mean_reward=mean_reward,
        val_score=val_score, test_p=test_p, test_r=test_r, test_f1=test_f1,
        enhanced_count=int(enhanced.sum()),
    )
    return record, val_score


def run_mlpac(
    data: PartialDataset,
    val: PartialDataset,
    config: TrainConfig,
    recall_target_hook=None,
    checkpoint_path=None,
) -> TrainResult:
    """Train a policy with critic-guided local rewards plus a global reward.

    ``recall_target_hook(epoch, rows, targets)`` - when given - is invoked
    with the exact label matrix the global reward is computed against, so a
    caller can assert enhanced labels never leak into it.
    ``checkpoint_path`` gets the best policy written whenever it improves.
    """
    if data.num_classes != val.num_classes or data.d != val.d:
        raise InputError("training and validation data disagree on classes or features")
    dims = _model_dims(data, config)
    policy, critic = pretrain(dims, data, config)
    obs01 = data.observed
    enhanced = obs01.copy()
    records = []

    best_policy = policy
    best_score = validation_eval(policy, val)
    best_epoch = -1
    if checkpoint_path is not None:
        net.save_model(best_policy, checkpoint_path)
    # Epoch -1 row: the pretrained state that seeds the best-policy tracker.
    record, _ = _policy_epoch_state(
        policy, data, val, -1, "pretrain", 0.0, None, enhanced, best_score
    )
    records.append(record)

    velocity = net.zero_gradients(policy)
    t_steps = config.sample_steps
    for epoch in range(config.total_epochs):
        w = reward_weight(epoch, config.reward, config)
        critic_live = config.iterate_critic and epoch < config.iterative_epochs
        shuffle_rng = np.random.default_rng([config.seed, _S_SHUFFLE, 1000 + epoch])
        reward_sum = 0.0
        reward_count = 0
        for b, rows in enumerate(_batches(data.n, config.batch_size, shuffle_rng)):
            x = data.features[rows]
            obs_b = obs01[rows]
            if critic_live:
                critic = learners.critic_step(
                    critic, x, enhanced[rows].astype(float),
                    CriticMode(config.critic_update_mode), config.critic_lr,
                    rng=np.random.default_rng([config.seed, _S_NEG_SAMPLE, epoch, b]),
                )
            p_pol = net.forward(policy, x)
            n_rows, n_classes = p_pol.shape

            action_rng = np.random.default_rng([config.seed, _S_ACTIONS, epoch, b])
            draws = action_rng.random((n_rows, t_steps, n_classes))
            actions = np.where(draws < p_pol[:, None, :], 1, -1)

            if config.use_local_reward:
                confidence = rewards.clamped_confidence(net.forward(critic, x))
                class_rng = np.random.default_rng([config.seed, _S_REWARD_CLASSES, epoch, b])
                mask = np.zeros((n_rows, n_classes))
                denom = np.empty(n_rows)
                for i in range(n_rows):
                    chosen = rewards.sample_reward_classes_rng(
                        obs_b[i], config.reward.unknown_ratio, class_rng
                    )
                    mask[i, chosen] = 1.0
                    denom[i] = chosen.size if config.local_norm == "sampled" else n_classes
                local = np.einsum(
                    "btc,bc->bt", actions.astype(float), confidence * mask / denom[:, None]
                )
            else:
                local = np.zeros((n_rows, t_steps))

            if recall_target_hook is not None:
                recall_target_hook(epoch, rows, obs_b)
            total = local + w * _global_rewards(actions, obs_b, config.global_reward_kind)
            reward_sum += float(total.sum())
            reward_count += total.size

            shaped = total
            if config.use_reward_baseline:
                shaped = total - total.mean(axis=1, keepdims=True)
            rollouts = [
                SampledRollout(
                    instance=i,
                    actions=actions[i],
                    rewards=shaped[i],
                    log_probs=learners.batch_log_probs(p_pol[i], actions[i]),
                )
                for i in range(n_rows)
            ]
            grads = learners.reinforce_batch_gradient(policy, x, rollouts)
            if config.momentum > 0.0:
                velocity = grads.added(velocity.scaled(config.momentum))
            else:
                velocity = grads
            policy = net.apply_update(policy, velocity, config.policy_lr, "ascend")

        _check_finite(policy, epoch)
        if config.use_enhancement:
            enhanced = enhance_labels(policy, critic, data, config.enhance_threshold)
        mean_reward = reward_sum / reward_count if reward_count else None
        phase = "iterative" if critic_live else "policy_only"
        record, val_score = _policy_epoch_state(
            policy, data, val, epoch, phase, w, mean_reward, enhanced, best_score
        )
        records.append(record)
        if val_score > best_score:
            best_policy, best_score, best_epoch = policy, val_score, epoch
            if checkpoint_path is not None:
                net.save_model(best_policy, checkpoint_path)

    return TrainResult(
        method="mlpac",
        best_policy=best_policy,
        final_critic=critic,
        records=records,
        best_epoch=best_epoch,
        best_val_score=best_score,
    )


_VARIANT_MODES = {
    "negative_mode": CriticMode("plain"),
    "pos_weight": CriticMode("pos_weight"),
    "neg_weight": CriticMode("neg_sample", neg_keep_multiple=10),
}


def run_baseline(
    data: PartialDataset,
    val: PartialDataset,
    variant: str,
    config: TrainConfig,
    checkpoint_path=None,
) -> TrainResult:
    """Supervised baseline: unknowns as FALSE, per-variant loss weighting,
    trained for the full baseline epoch budget with best-epoch tracking."""
    if variant not in _VARIANT_MODES:
        raise ConfigurationError(f"variant must be one of {BASELINE_VARIANTS}, got {variant!r}")
    if data.num_classes != val.num_classes or data.d != val.d:
        raise InputError("training and validation data disagree on classes or features")
    mode = _VARIANT_MODES[variant]
    model = net.init_model(_model_dims(data, config), [config.seed, _S_BASELINE_INIT])
    labels = data.observed.astype(float)
    observed_count = int(data.observed.sum())

    records = []
    best_model = model
    best_score = validation_eval(model, val)
    best_epoch = -1
    if checkpoint_path is not None:
        net.save_model(best_model, checkpoint_path)
    test_p, test_r, test_f1 = evaluate_policy(model, data)
    records.append(EpochRecord(
        epoch=-1, phase="supervised", w=None, mean_reward=None,
        val_score=best_score, test_p=test_p, test_r=test_r, test_f1=test_f1,
        enhanced_count=observed_count,
    ))
    for epoch in range(config.baseline_epochs):
        rng = np.random.default_rng([config.seed, _S_SHUFFLE, 2000 + epoch])
        for b, rows in enumerate(_batches(data.n, config.batch_size, rng)):
            model = learners.critic_step(
                model, data.features[rows], labels[rows], mode, config.critic_lr,
                rng=np.random.default_rng([config.seed, _S_NEG_SAMPLE, epoch, b]),
            )
        _check_finite(model, epoch)
        val_score = validation_eval(model, val)
        test_p, test_r, test_f1 = evaluate_policy(model, data)
        records.append(EpochRecord(
            epoch=epoch, phase="supervised", w=None, mean_reward=None,
            val_score=val_score, test_p=test_p, test_r=test_r, test_f1=test_f1,
            enhanced_count=observed_count,
        ))
        if val_score > best_score:
            best_model, best_score, best_epoch = model, val_score, epoch
            if checkpoint_path is not None:
                net.save_model(best_model, checkpoint_path)
    result = TrainResult(
        method=variant,
        best_policy=best_model,
        final_critic=model,
        records=records,
        best_epoch=best_epoch,
        best_val_score=best_score,
    )
    return result


def run_self_training(
    data: PartialDataset,
    val: PartialDataset,
    config: TrainConfig,
    checkpoint_path=None,
) -> TrainResult:
    """Self-training ablation: one supervised network, retrained each epoch on
    labels enhanced by its own confident positive predictions."""
    model = net.init_model(_model_dims(data, config), [config.seed, _S_BASELINE_INIT])
    obs01 = data.observed
    enhanced = obs01.copy()
    records = []
    best_model = model
    best_score = validation_eval(model, val)
    best_epoch = -1
    test_p, test_r, test_f1 = evaluate_policy(model, data)
    records.append(EpochRecord(
        epoch=-1, phase="self_training", w=None, mean_reward=None,
        val_score=best_score, test_p=test_p, test_r=test_r, test_f1=test_f1,
        enhanced_count=int(enhanced.sum()),
    ))
    for epoch in range(config.total_epochs):
        rng = np.random.default_rng([config.seed, _S_SHUFFLE, 3000 + epoch])
        for rows in _batches(data.n, config.batch_size, rng):
            model = learners.critic_step(
                model, data.features[rows], enhanced[rows].astype(float),
                CriticMode("plain"), config.critic_lr,
            )
        _check_finite(model, epoch)
        # Same enhancement rule with the network agreeing with itself.
        enhanced = enhance_labels(model, model, data, config.enhance_threshold)
        val_score = validation_eval(model, val)
        test_p, test_r, test_f1 = evaluate_policy(model, data)
        records.append(EpochRecord(
            epoch=epoch, phase="self_training", w=None, mean_reward=None,
            val_score=val_score, test_p=test_p, test_r=test_r, test_f1=test_f1,
            enhanced_count=int(enhanced.sum()),
        ))
        if val_score > best_score:
            best_model, best_score, best_epoch = model, val_score, epoch
            if checkpoint_path is not None:
                net.save_model(best_model, checkpoint_path)
    return TrainResult(
        method="self_training",
        best_policy=best_model,
        final_critic=model,
        records=records,
        best_epoch=best_epoch,
        best_val_score=best_score,
    )


def split_train_val(ds: PartialDataset, val_fraction: float = 0.2):
    """Deterministic tail split of a dataset into (train, validation)."""
    if not 0.0 < val_fraction < 1.0:
        raise ConfigurationError(f"val_fraction must be in (0, 1), got {val_fraction}")
    n_val = max(1, int(round(ds.n * val_fraction)))
    if n_val >= ds.n:
        raise ConfigurationError("validation split would consume the whole dataset")
    cut = ds.n - n_val
    return ds.subset(np.arange(cut)), ds.subset(np.arange(cut, ds.n))
