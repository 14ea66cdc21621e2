"""Multi-label classification from positive-unlabeled annotations via
policy-gradient training with a supervised critic."""

from .data import (
    FullDataset,
    PartialDataset,
    generate_multilabel,
    load_dataset,
    make_binary_pu,
    mask_positives,
    save_dataset,
)
from .estimators import PuRlClassifier, WeakLabelClassifier
from .exceptions import (
    ConfigurationError,
    FileFormatError,
    InputError,
    MetricError,
    MlpacError,
    NumericError,
)
from .learners import CriticMode, SampledRollout
from .metrics import MetricsReport, compute_report, mean_ap, prf1
from .net import DenseModel, Gradients, forward, init_model, load_model, save_model
from .rewards import RewardSpec, local_reward, recall_reward, total_reward
from .training import (
    TrainConfig,
    TrainResult,
    evaluate_policy,
    run_baseline,
    run_mlpac,
    run_self_training,
    split_train_val,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "CriticMode",
    "DenseModel",
    "FileFormatError",
    "FullDataset",
    "Gradients",
    "InputError",
    "MetricError",
    "MetricsReport",
    "MlpacError",
    "NumericError",
    "PartialDataset",
    "PuRlClassifier",
    "RewardSpec",
    "SampledRollout",
    "TrainConfig",
    "TrainResult",
    "WeakLabelClassifier",
    "compute_report",
    "evaluate_policy",
    "forward",
    "generate_multilabel",
    "init_model",
    "load_dataset",
    "load_model",
    "local_reward",
    "make_binary_pu",
    "mask_positives",
    "mean_ap",
    "prf1",
    "recall_reward",
    "run_baseline",
    "run_mlpac",
    "run_self_training",
    "save_dataset",
    "save_model",
    "split_train_val",
    "total_reward",
    "__version__",
]
