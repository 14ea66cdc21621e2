"""Synthetic multi-label datasets and their positive-unlabeled maskings.

Generation keeps hidden ground truth alongside the features so test-time
metrics are exact. Instances live in a latent Gaussian cloud; each class is
a halfspace (affinity to a class prototype above a calibrated threshold),
so the tasks stay learnable by small dense models. Masking keeps each true
positive cell independently with the requested probability and turns every
other cell into "unknown".
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, FileFormatError, InputError

_MASK_STREAM = 7919  # keeps masking draws distinct from other seed uses


@dataclass(frozen=True)
class FullDataset:
    """Fully labeled synthetic data: features plus {+1,-1} class labels."""

    features: np.ndarray
    true_labels: np.ndarray
    class_names: list
    seed: int

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def num_classes(self):
        return self.true_labels.shape[1]


@dataclass(frozen=True)
class PartialDataset:
    """Positive-unlabeled view: observed is {1 = known positive, 0 = unknown}.

    ``true_labels`` carries the hidden ground truth when the data is
    synthetic; it is only for evaluation, never for training.
    """

    features: np.ndarray
    observed: np.ndarray
    annotation_ratio: float
    seed: int
    class_names: list
    true_labels: np.ndarray = None

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def num_classes(self):
        return self.observed.shape[1]

    def subset(self, rows) -> "PartialDataset":
        """Row-sliced copy (used for train/validation splits)."""
        truth = None if self.true_labels is None else self.true_labels[rows]
        return PartialDataset(
            features=self.features[rows],
            observed=self.observed[rows],
            annotation_ratio=self.annotation_ratio,
            seed=self.seed,
            class_names=self.class_names,
            true_labels=truth,
        )


def generate_multilabel(
    n: int,
    d: int,
    num_classes: int,
    positive_rate: float,
    cluster_spread: float,
    seed,
) -> FullDataset:
    """Synthetic multi-label data with per-class positive rate ~ positive_rate.

    Latent points are standard Gaussian; class c is positive for the points
    whose affinity to prototype c ranks in the top round(n * positive_rate).
    Emitted features are the latent points plus cluster_spread * noise, so
    classes are linearly separable up to that noise. Deterministic per seed.
    """
    if n < 1 or d < 1 or num_classes < 1:
        raise ConfigurationError(f"n, d, num_classes must be >= 1, got {(n, d, num_classes)}")
    if not 0.0 < positive_rate < 0.5:
        raise ConfigurationError(
            f"positive_rate must be in (0, 0.5) for the imbalanced regime, got {positive_rate}"
        )
    if cluster_spread < 0:
        raise ConfigurationError(f"cluster_spread must be >= 0, got {cluster_spread}")
    k = int(round(n * positive_rate))
    if k < 1:
        raise ConfigurationError(
            f"positive_rate {positive_rate} yields no positives at n={n}"
        )
    rng = np.random.default_rng(seed)
    prototypes = rng.normal(size=(num_classes, d))
    prototypes /= np.linalg.norm(prototypes, axis=1, keepdims=True)
    latent = rng.normal(size=(n, d))
    affinity = latent @ prototypes.T
    labels = np.full((n, num_classes), -1, dtype=int)
    # Top-k by affinity per class: empirical rate is exactly k/n.
    order = np.argsort(-affinity, axis=0, kind="stable")
    for c in range(num_classes):
        labels[order[:k, c], c] = 1
    features = latent + cluster_spread * rng.normal(size=(n, d))
    names = [f"class_{c:02d}" for c in range(num_classes)]
    return FullDataset(features=features, true_labels=labels, class_names=names, seed=int(seed))


def _cell_uniforms(shape, seed) -> np.ndarray:
    # One uniform per cell, independent of the keep ratio, so maskings at
    # growing ratios are nested for a fixed seed.
    return np.random.default_rng([int(seed), _MASK_STREAM]).random(shape)


def mask_positives(full: FullDataset, keep_ratio: float, seed) -> PartialDataset:
    """Keep each true-positive cell with probability keep_ratio; the rest
    become unknown. Never fabricates a positive."""
    if not 0.0 < keep_ratio <= 1.0:
        raise ConfigurationError(f"keep_ratio must be in (0, 1], got {keep_ratio}")
    u = _cell_uniforms(full.true_labels.shape, seed)
    observed = ((full.true_labels == 1) & (u < keep_ratio)).astype(int)
    return PartialDataset(
        features=full.features,
        observed=observed,
        annotation_ratio=float(keep_ratio),
        seed=int(seed),
        class_names=list(full.class_names),
        true_labels=full.true_labels,
    )


def make_binary_pu(full: FullDataset, positive_class: int, keep_ratio: float, seed) -> PartialDataset:
    """Collapse one class against the rest into a single Bernoulli column,
    then mask its positives like mask_positives."""
    if not 0 <= positive_class < full.num_classes:
        raise InputError(
            f"positive_class {positive_class} outside 0..{full.num_classes - 1}"
        )
    if not 0.0 < keep_ratio <= 1.0:
        raise ConfigurationError(f"keep_ratio must be in (0, 1], got {keep_ratio}")
    member = (full.true_labels[:, positive_class] == 1)[:, None]
    truth = np.where(member, 1, -1)
    u = _cell_uniforms(truth.shape, seed)
    observed = (member & (u < keep_ratio)).astype(int)
    return PartialDataset(
        features=full.features,
        observed=observed,
        annotation_ratio=float(keep_ratio),
        seed=int(seed),
        class_names=[full.class_names[positive_class]],
        true_labels=truth,
    )


def save_dataset(ds, path) -> None:
    """Write a dataset as JSON lines: one header line, then one line per row.

    Floats use Python's shortest round-trip decimal encoding, so a load is
    bit-identical to what was saved.
    """
    is_full = isinstance(ds, FullDataset)
    header = {
        "kind": "full" if is_full else "partial",
        "n": ds.n,
        "d": ds.d,
        "num_classes": ds.num_classes,
        "class_names": list(ds.class_names),
        "seed": ds.seed,
    }
    if not is_full:
        header["annotation_ratio"] = ds.annotation_ratio
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for i in range(ds.n):
            row = {"x": ds.features[i].tolist()}
            if is_full:
                row["y_true"] = ds.true_labels[i].tolist()
            else:
                row["y_obs"] = ds.observed[i].tolist()
                if ds.true_labels is not None:
                    row["y_true"] = ds.true_labels[i].tolist()
            fh.write(json.dumps(row) + "\n")


def _parse_vector(row, key, length, line, allowed=None):
    if key not in row:
        return None
    vec = row[key]
    if not isinstance(vec, list) or len(vec) != length:
        raise FileFormatError(
            f"field {key!r} must be a list of length {length}", line=line
        )
    if allowed is not None and any(v not in allowed for v in vec):
        raise FileFormatError(f"field {key!r} has values outside {allowed}", line=line)
    return vec


def load_dataset(path):
    """Read a dataset written by save_dataset; returns Full- or PartialDataset."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FileFormatError("empty dataset file", line=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"header is not valid JSON: {exc}", line=1) from exc
    try:
        kind = header["kind"]
        n = int(header["n"])
        d = int(header["d"])
        num_classes = int(header["num_classes"])
        class_names = list(header["class_names"])
        seed = int(header["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"malformed header: {exc}", line=1) from exc
    if kind not in ("full", "partial"):
        raise FileFormatError(f"unknown dataset kind {kind!r}", line=1)
    if len(lines) - 1 != n:
        raise FileFormatError(
            f"header declares n={n} rows but file has {len(lines) - 1}",
            line=len(lines),
        )
    features = np.empty((n, d))
    truth = np.empty((n, num_classes), dtype=int)
    observed = np.empty((n, num_classes), dtype=int)
    have_truth = True
    for i, text in enumerate(lines[1:]):
        line_no = i + 2
        try:
            row = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"row is not valid JSON: {exc}", line=line_no) from exc
        x = _parse_vector(row, "x", d, line_no)
        if x is None:
            raise FileFormatError("row is missing field 'x'", line=line_no)
        features[i] = x
        y_true = _parse_vector(row, "y_true", num_classes, line_no, allowed={-1, 1})
        if kind == "full":
            if y_true is None:
                raise FileFormatError("full dataset row is missing 'y_true'", line=line_no)
            truth[i] = y_true
        else:
            y_obs = _parse_vector(row, "y_obs", num_classes, line_no, allowed={0, 1})
            if y_obs is None:
                raise FileFormatError("partial dataset row is missing 'y_obs'", line=line_no)
            observed[i] = y_obs
            if y_true is None:
                have_truth = False
            else:
                truth[i] = y_true
    if kind == "full":
        return FullDataset(
            features=features, true_labels=truth, class_names=class_names, seed=seed
        )
    ratio = header.get("annotation_ratio")
    if ratio is None:
        raise FileFormatError("partial dataset header is missing 'annotation_ratio'", line=1)
    return PartialDataset(
        features=features,
        observed=observed,
        annotation_ratio=float(ratio),
        seed=seed,
        class_names=class_names,
        true_labels=truth if have_truth else None,
    )
