"""Policy-side and critic-side learning machinery.

The policy emits independent per-class Bernoulli probabilities; actions are
per-class TRUE/FALSE decisions sampled from them. The REINFORCE batch
gradient aggregates many sampled action vectors per instance into a single
backward pass. The critic is trained supervised with unknowns as FALSE,
optionally re-weighted (positive up-weighting or negative subsampling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import net
from .exceptions import ConfigurationError, InputError
from .net import PROB_EPS, DenseModel, Gradients


@dataclass(frozen=True)
class SampledRollout:
    """T sampled action vectors for one batch instance, with their total
    rewards and log-probabilities."""

    instance: int
    actions: np.ndarray  # (T, C) in {+1, -1}
    rewards: np.ndarray  # (T,)
    log_probs: np.ndarray  # (T,)

    def __post_init__(self):
        t = self.actions.shape[0]
        if t < 1:
            raise InputError("rollout needs at least one sample")
        if self.rewards.shape != (t,) or self.log_probs.shape != (t,):
            raise InputError("rollout fields must all have length T")
        if not np.isfinite(self.rewards).all():
            raise InputError("rollout rewards must be finite")


@dataclass(frozen=True)
class CriticMode:
    """Supervised weighting scheme for the critic update.

    plain: unit weights. pos_weight: positive cells weighted by
    ``pos_weight_value`` (default: the batch's unlabeled/positive cell
    ratio). neg_sample: keep all positive cells plus a uniform random subset
    of unlabeled cells, ``neg_keep_multiple`` times the positive count.
    """

    variant: str = "plain"
    pos_weight_value: float = None
    neg_keep_multiple: int = 10

    def __post_init__(self):
        if self.variant not in ("plain", "pos_weight", "neg_sample"):
            raise ConfigurationError(f"unknown critic mode variant {self.variant!r}")
        if self.variant == "neg_sample" and self.neg_keep_multiple < 1:
            raise ConfigurationError("neg_keep_multiple must be a positive integer")
        if self.pos_weight_value is not None and not self.pos_weight_value > 0:
            raise ConfigurationError("pos_weight_value must be > 0")


def sample_actions(p, t: int, seed) -> np.ndarray:
    """Draw T independent action vectors; class c is +1 with probability p_c."""
    return sample_actions_rng(p, t, np.random.default_rng(seed))


def sample_actions_rng(p, t: int, rng) -> np.ndarray:
    if t < 1:
        raise InputError(f"need at least one sample, got T={t}")
    p = np.asarray(p, dtype=float)
    draws = rng.random((t, p.size))
    return np.where(draws < p, 1, -1)


def action_log_prob(p, actions) -> float:
    """ln pi(actions | x) for factorized Bernoulli probabilities (clamped)."""
    p = np.clip(np.asarray(p, dtype=float), PROB_EPS, 1.0 - PROB_EPS)
    actions = np.asarray(actions)
    if p.shape != actions.shape:
        raise InputError(f"probs shape {p.shape} != actions shape {actions.shape}")
    return net.logprob_value(p, actions)


def batch_log_probs(p, actions) -> np.ndarray:
    """Log-probabilities for a (T, C) block of actions under one prob vector."""
    p = np.clip(np.asarray(p, dtype=float), PROB_EPS, 1.0 - PROB_EPS)
    chosen = np.where(actions == 1, p[None, :], 1.0 - p[None, :])
    return np.log(chosen).sum(axis=1)


def reinforce_batch_gradient(policy: DenseModel, x_batch, rollouts) -> Gradients:
    """REINFORCE gradient over a batch.

    Equals the sum over rollouts of (1/batch) * (1/T) * sum_t
    grad[ln pi(a_t | x_i)] * R_t, computed with one backward pass by
    aggregating each instance's per-sample output deltas first.
    """
    x_batch = np.atleast_2d(np.asarray(x_batch, dtype=float))
    n = x_batch.shape[0]
    if n == 0 or not rollouts:
        raise InputError("REINFORCE gradient needs a nonempty batch and rollouts")
    for rollout in rollouts:
        if not 0 <= rollout.instance < n:
            raise InputError(f"rollout instance {rollout.instance} outside batch of {n}")

    def output_delta(probs, live):
        delta = np.zeros_like(probs)
        for rollout in rollouts:
            i = rollout.instance
            targets = (rollout.actions == 1).astype(float)
            per_sample = rollout.rewards[:, None] * (targets - probs[i][None, :])
            delta[i] += per_sample.sum(axis=0) / rollout.rewards.size
        return live * delta / n

    return net.reinforce_delta_gradient(policy, x_batch, output_delta)


def policy_predict(policy: DenseModel, x) -> np.ndarray:
    """Deterministic decisions: +1 where the probability strictly exceeds 0.5."""
    p = net.forward(policy, x)
    return np.where(p > 0.5, 1, -1)


def critic_predict(critic: DenseModel, x) -> np.ndarray:
    """Per-class booleans: TRUE where the critic probability strictly exceeds 0.5."""
    return net.forward(critic, x) > 0.5


def _mode_weights(labels: np.ndarray, mode: CriticMode, rng) -> np.ndarray:
    pos = labels == 1
    n_pos = int(pos.sum())
    n_unl = labels.size - n_pos
    weights = np.ones_like(labels, dtype=float)
    if mode.variant == "plain" or n_pos == 0:
        # pos_weight / neg_sample are undefined without positives; fall back.
        return weights
    if mode.variant == "pos_weight":
        value = mode.pos_weight_value if mode.pos_weight_value is not None else n_unl / n_pos
        weights[pos] = value
        return weights
    # neg_sample: zero out all unlabeled cells except a random subset.
    keep = min(mode.neg_keep_multiple * n_pos, n_unl)
    unl_flat = np.flatnonzero(~pos.ravel())
    kept = rng.choice(unl_flat, size=keep, replace=False)
    mask = np.zeros(labels.size, dtype=float)
    mask[kept] = 1.0
    mask[np.flatnonzero(pos.ravel())] = 1.0
    return mask.reshape(labels.shape)


def critic_step(critic: DenseModel, x_batch, labels, mode: CriticMode, lr: float, rng=None) -> DenseModel:
    """One weighted-BCE descent step on {0,1} targets (unknowns count FALSE)."""
    labels = np.atleast_2d(np.asarray(labels, dtype=float))
    if rng is None:
        rng = np.random.default_rng(0)
    weights = _mode_weights(labels, mode, rng)
    _, grads = net.backward_weighted_bce(critic, x_batch, labels, weights)
    return net.apply_update(critic, grads, lr, "descend")
