"""Evaluation metrics: micro P/R/F1 over label cells and score-ranked
average precision (AP, mAP).

AP sums are accumulated with math.fsum, so results are independent of
summation order and reproducible bit-for-bit against reference
implementations that count the same way.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import InputError, MetricError


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    target_kind: str  # "ground_truth" or "observed_proxy"
    per_class_ap: list = field(default_factory=list)
    mean_ap: float = None

    def to_dict(self):
        return asdict(self)


def confusion_counts(predictions, targets):
    """Cell-level TP/FP/FN for {+1,-1} predictions against {+1,-1} targets."""
    predictions = np.asarray(predictions)
    targets = np.asarray(targets)
    if predictions.shape != targets.shape:
        raise InputError(
            f"predictions shape {predictions.shape} != targets shape {targets.shape}"
        )
    tp = int(((predictions == 1) & (targets == 1)).sum())
    fp = int(((predictions == 1) & (targets != 1)).sum())
    fn = int(((predictions != 1) & (targets == 1)).sum())
    return tp, fp, fn


def prf1(predictions, targets):
    """Micro-averaged precision, recall, F1; zero denominators yield 0."""
    tp, fp, fn = confusion_counts(predictions, targets)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def average_precision(scores, targets) -> float:
    """AP for one class: mean of precision-at-k over the positive ranks.

    Ranking is by descending score; ties break by ascending instance index.
    """
    scores = np.asarray(scores, dtype=float)
    targets = np.asarray(targets)
    if scores.shape != targets.shape or scores.ndim != 1:
        raise InputError("scores and targets must be equal-length vectors")
    n_pos = int((targets == 1).sum())
    if n_pos == 0:
        raise MetricError("average precision is undefined without a positive target")
    order = np.argsort(-scores, kind="stable")
    hits = targets[order] == 1
    precisions = []
    seen = 0
    for k, hit in enumerate(hits, start=1):
        if hit:
            seen += 1
            precisions.append(seen / k)
    return math.fsum(precisions) / n_pos


def mean_ap(scores, targets) -> float:
    """Mean AP over the classes that have at least one positive target."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    targets = np.atleast_2d(np.asarray(targets))
    if scores.shape != targets.shape:
        raise InputError(f"scores shape {scores.shape} != targets shape {targets.shape}")
    aps = []
    for c in range(scores.shape[1]):
        if (targets[:, c] == 1).any():
            aps.append(average_precision(scores[:, c], targets[:, c]))
    if not aps:
        raise MetricError("mAP is undefined: no class has a positive target")
    return math.fsum(aps) / len(aps)


def per_class_ap(scores, targets) -> list:
    """AP per class; None where the class has no positive target."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    targets = np.atleast_2d(np.asarray(targets))
    out = []
    for c in range(scores.shape[1]):
        if (targets[:, c] == 1).any():
            out.append(average_precision(scores[:, c], targets[:, c]))
        else:
            out.append(None)
    return out


def compute_report(predictions, targets, scores=None, target_kind="ground_truth") -> MetricsReport:
    """Full report against {+1,-1} targets; AP fields filled when scores given."""
    tp, fp, fn = confusion_counts(predictions, targets)
    precision, recall, f1 = prf1(predictions, targets)
    aps = []
    m_ap = None
    if scores is not None:
        aps = per_class_ap(scores, targets)
        defined = [a for a in aps if a is not None]
        m_ap = math.fsum(defined) / len(defined) if defined else None
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        tp=tp,
        fp=fp,
        fn=fn,
        target_kind=target_kind,
        per_class_ap=aps,
        mean_ap=m_ap,
    )
