"""Input validation helpers for the estimator-style models."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-d (n_samples, n_features), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_labels(y, n_classes: int | None = None, name: str = "y") -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == arr.astype(int)):
            raise ValueError(f"{name} must hold integer class ids")
        arr = arr.astype(int)
    if arr.min() < 0:
        raise ValueError(f"{name} holds negative class ids")
    if n_classes is not None and arr.max() >= n_classes:
        raise ValueError(f"{name} holds id {arr.max()} but only {n_classes} classes exist")
    return arr.astype(np.int64)


def check_fitted(estimator, attribute: str) -> None:
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(f"{type(estimator).__name__} is not fitted yet; call fit first")


def check_dim(value: int, name: str, minimum: int = 1) -> int:
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value
