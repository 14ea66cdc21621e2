"""Reward functions: critic-confidence local rewards, recall-style global
rewards, and their weighted combination.

Local rewards are clamped log-odds of the critic's confidence, signed by the
sampled action, so agreement with the critic pays off and disagreement costs.
The global reward is the recall of the observed positive set under the
sampled action vector; precision- and F1-based variants exist only for
ablation runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, InputError
from .net import PROB_EPS


@dataclass(frozen=True)
class RewardSpec:
    """Reward configuration: initial global weight, its decay, and the
    fraction of unknown classes drawn into the local-reward set."""

    global_weight: float = 10.0
    decay: str = "linear"  # "linear" drops to 0.1x by the last epoch
    unknown_ratio: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.global_weight) or self.global_weight < 0:
            raise ConfigurationError(f"global_weight must be finite and >= 0, got {self.global_weight}")
        if not 0.0 < self.unknown_ratio <= 1.0:
            raise ConfigurationError(f"unknown_ratio must be in (0, 1], got {self.unknown_ratio}")
        if self.decay not in ("linear", "constant"):
            raise ConfigurationError(f"decay must be 'linear' or 'constant', got {self.decay!r}")


def clamped_confidence(p):
    """Log-odds of p, clamped to [-1, 1]; p itself clamped away from {0, 1}."""
    p = np.clip(np.asarray(p, dtype=float), PROB_EPS, 1.0 - PROB_EPS)
    return np.clip(np.log(p) - np.log(1.0 - p), -1.0, 1.0)


def local_reward(p, action):
    """Reward for one class decision given critic confidence p.

    +1 actions earn the clamped log-odds of p, -1 actions its exact
    negation, so the reward is antisymmetric in the action by construction.
    """
    r = np.asarray(action, dtype=float) * clamped_confidence(p)
    return float(r) if np.ndim(r) == 0 else r


def sample_reward_classes(observed, unknown_ratio, seed) -> np.ndarray:
    """Classes whose local rewards count: every observed positive plus a
    uniform sample (without replacement) of ceil(ratio * n_unknown) unknowns.

    Returns sorted class indices; deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    return sample_reward_classes_rng(observed, unknown_ratio, rng)


def sample_reward_classes_rng(observed, unknown_ratio, rng) -> np.ndarray:
    if not 0.0 < unknown_ratio <= 1.0:
        raise ConfigurationError(f"unknown_ratio must be in (0, 1], got {unknown_ratio}")
    observed = np.asarray(observed)
    positives = np.flatnonzero(observed == 1)
    unknowns = np.flatnonzero(observed == 0)
    take = math.ceil(unknown_ratio * unknowns.size)
    if take > 0:
        sampled = rng.choice(unknowns, size=take, replace=False)
    else:
        sampled = np.empty(0, dtype=int)
    return np.sort(np.concatenate([positives, sampled]))


def recall_reward(observed, actions) -> float:
    """Fraction of observed positives the action vector sets TRUE.

    Instances with no observed positives score 0: the global term neither
    rewards nor punishes them.
    """
    observed = np.asarray(observed)
    actions = np.asarray(actions)
    if observed.shape != actions.shape:
        raise InputError(f"observed shape {observed.shape} != actions shape {actions.shape}")
    n_pos = int((observed == 1).sum())
    if n_pos == 0:
        return 0.0
    hit = int(((observed == 1) & (actions == 1)).sum())
    return hit / n_pos


def precision_reward(observed, actions) -> float:
    """Fraction of TRUE actions that are observed positives (ablation only)."""
    observed = np.asarray(observed)
    actions = np.asarray(actions)
    n_pred = int((actions == 1).sum())
    if n_pred == 0:
        return 0.0
    hit = int(((observed == 1) & (actions == 1)).sum())
    return hit / n_pred


def f1_reward(observed, actions) -> float:
    """Harmonic mean of the recall and precision rewards (ablation only)."""
    r = recall_reward(observed, actions)
    p = precision_reward(observed, actions)
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def total_reward(local_rs, recall: float, weight: float, norm_count: int = None) -> float:
    """Mean of the sampled local rewards plus weight * global reward.

    ``local_rs`` is a class->reward mapping or a sequence of reward values
    over the sampled class set. By default the local sum is normalized by
    the sampled-set size; pass ``norm_count`` (e.g. the full class count)
    to normalize by something else.
    """
    if isinstance(local_rs, dict):
        values = np.asarray(list(local_rs.values()), dtype=float)
    else:
        values = np.asarray(local_rs, dtype=float)
    if values.size == 0:
        raise InputError("total_reward needs a nonempty local-reward set")
    denom = values.size if norm_count is None else int(norm_count)
    if denom <= 0:
        raise InputError(f"normalization count must be positive, got {denom}")
    return float(values.sum() / denom + weight * recall)
