"""Input validation helpers shared by the estimator facade and the CLI."""

from __future__ import annotations

import numpy as np

from .exceptions import InputError


def as_feature_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float array with finite entries."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InputError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError(f"{name} contains NaN or infinite values")
    return arr


def as_label_matrix(y, allowed=(0, 1), name: str = "y") -> np.ndarray:
    """Coerce to a 2-D integer matrix whose values lie in ``allowed``."""
    arr = np.asarray(y)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    values = np.unique(arr)
    if not set(values.tolist()) <= set(allowed):
        raise InputError(f"{name} values must be in {set(allowed)}, got {values.tolist()}")
    return arr.astype(int)


def check_consistent_rows(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[0] != y.shape[0]:
        raise InputError(
            f"X and y row counts differ: {x.shape[0]} vs {y.shape[0]}"
        )
