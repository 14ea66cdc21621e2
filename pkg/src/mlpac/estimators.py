"""Scikit-learn style estimators wrapping the training loops.

``PuRlClassifier`` fits the reinforcement-learned policy from features and
a positive-unlabeled {0,1} label matrix; ``WeakLabelClassifier`` exposes
the supervised baselines behind the same interface. Both follow the
sklearn contract: constructor stores hyperparameters verbatim, ``fit``
learns attributes with trailing underscores, ``get_params``/``set_params``
come from ``BaseEstimator`` so the estimators clone cleanly.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import learners, metrics, net
from .data import PartialDataset
from .exceptions import ConfigurationError
from .rewards import RewardSpec
from .training import (
    BASELINE_VARIANTS,
    TrainConfig,
    run_baseline,
    run_mlpac,
    split_train_val,
)
from .validation import as_feature_matrix, as_label_matrix, check_consistent_rows


class _PolicyPredictorMixin:
    """Prediction methods shared by anything that fits a ``policy_``."""

    def predict_proba(self, X):
        """Per-class probabilities of the positive action, shape (n, classes)."""
        check_is_fitted(self, "policy_")
        X = as_feature_matrix(X)
        return net.forward(self.policy_, X)

    def predict(self, X):
        """Binary {0,1} predictions, one column per class."""
        check_is_fitted(self, "policy_")
        X = as_feature_matrix(X)
        return (learners.policy_predict(self.policy_, X) == 1).astype(int)

    def score(self, X, y):
        """Micro-averaged F1 of predictions against a {0,1} label matrix."""
        check_is_fitted(self, "policy_")
        X = as_feature_matrix(X)
        y = as_label_matrix(y)
        check_consistent_rows(X, y)
        predictions = learners.policy_predict(self.policy_, X)
        return metrics.prf1(predictions, np.where(y == 1, 1, -1))[2]


class PuRlClassifier(_PolicyPredictorMixin, BaseEstimator):
    """Multi-label classifier trained by policy gradient on PU annotations.

    ``fit(X, y)`` takes observed labels where 1 means annotated positive and
    0 means unknown. An internal tail split of the rows provides the
    validation set used for best-epoch selection.
    """

    def __init__(
        self,
        hidden_dims=(32,),
        total_epochs=30,
        iterative_epochs=10,
        pretrain_epochs=3,
        sample_steps=10,
        policy_lr=0.2,
        critic_lr=1.0,
        enhance_threshold=0.95,
        global_weight=10.0,
        weight_decay="linear",
        unknown_ratio=0.4,
        batch_size=64,
        global_reward_kind="recall",
        use_local_reward=True,
        use_enhancement=True,
        iterate_critic=True,
        val_fraction=0.2,
        random_state=0,
    ):
        self.hidden_dims = hidden_dims
        self.total_epochs = total_epochs
        self.iterative_epochs = iterative_epochs
        self.pretrain_epochs = pretrain_epochs
        self.sample_steps = sample_steps
        self.policy_lr = policy_lr
        self.critic_lr = critic_lr
        self.enhance_threshold = enhance_threshold
        self.global_weight = global_weight
        self.weight_decay = weight_decay
        self.unknown_ratio = unknown_ratio
        self.batch_size = batch_size
        self.global_reward_kind = global_reward_kind
        self.use_local_reward = use_local_reward
        self.use_enhancement = use_enhancement
        self.iterate_critic = iterate_critic
        self.val_fraction = val_fraction
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        reward = RewardSpec(
            global_weight=self.global_weight,
            decay=self.weight_decay,
            unknown_ratio=self.unknown_ratio,
            seed=self.random_state,
        )
        return TrainConfig(
            hidden_dims=tuple(self.hidden_dims),
            total_epochs=self.total_epochs,
            iterative_epochs=self.iterative_epochs,
            pretrain_epochs=self.pretrain_epochs,
            sample_steps=self.sample_steps,
            policy_lr=self.policy_lr,
            critic_lr=self.critic_lr,
            enhance_threshold=self.enhance_threshold,
            reward=reward,
            batch_size=self.batch_size,
            seed=self.random_state,
            global_reward_kind=self.global_reward_kind,
            use_local_reward=self.use_local_reward,
            use_enhancement=self.use_enhancement,
            iterate_critic=self.iterate_critic,
        )

    def fit(self, X, y):
        X = as_feature_matrix(X)
        y = as_label_matrix(y)
        check_consistent_rows(X, y)
        ds = PartialDataset(
            features=X,
            observed=y,
            annotation_ratio=float("nan"),
            seed=self.random_state,
            class_names=[f"class_{c:02d}" for c in range(y.shape[1])],
        )
        train, val = split_train_val(ds, self.val_fraction)
        result = run_mlpac(train, val, self._config())
        self.policy_ = result.best_policy
        self.critic_ = result.final_critic
        self.train_result_ = result
        self.n_features_in_ = X.shape[1]
        self.n_classes_ = y.shape[1]
        return self


class WeakLabelClassifier(_PolicyPredictorMixin, BaseEstimator):
    """Supervised baseline treating unknown labels as negatives.

    ``variant`` selects the loss weighting: plain BCE ("negative_mode"),
    up-weighted positives ("pos_weight"), or down-sampled negatives
    ("neg_weight").
    """

    def __init__(
        self,
        variant="negative_mode",
        hidden_dims=(32,),
        epochs=60,
        learning_rate=1.0,
        batch_size=64,
        val_fraction=0.2,
        random_state=0,
    ):
        self.variant = variant
        self.hidden_dims = hidden_dims
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.val_fraction = val_fraction
        self.random_state = random_state

    def fit(self, X, y):
        if self.variant not in BASELINE_VARIANTS:
            raise ConfigurationError(
                f"variant must be one of {BASELINE_VARIANTS}, got {self.variant!r}"
            )
        X = as_feature_matrix(X)
        y = as_label_matrix(y)
        check_consistent_rows(X, y)
        ds = PartialDataset(
            features=X,
            observed=y,
            annotation_ratio=float("nan"),
            seed=self.random_state,
            class_names=[f"class_{c:02d}" for c in range(y.shape[1])],
        )
        train, val = split_train_val(ds, self.val_fraction)
        config = TrainConfig(
            hidden_dims=tuple(self.hidden_dims),
            critic_lr=self.learning_rate,
            batch_size=self.batch_size,
            seed=self.random_state,
            baseline_epochs=self.epochs,
        )
        result = run_baseline(train, val, self.variant, config)
        self.policy_ = result.best_policy
        self.train_result_ = result
        self.n_features_in_ = X.shape[1]
        self.n_classes_ = y.shape[1]
        return self
