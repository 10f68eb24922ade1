"""Minibatch training loop shared by the two sequence models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .training import AdamState, clip_gradients, gather_batch, sgd_momentum_update, window_index

MAX_VAL_WINDOWS = 4096
EVAL_BATCH = 512


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    train_curve: list[float]
    val_curve: list[float]
    best_val_loss: float
    epochs_run: int


def run_training(
    *,
    params: dict[str, np.ndarray],
    xs,
    ys,
    val_xs,
    val_ys,
    window: int,
    offset: int,
    lr: float,
    momentum: float,
    optimizer: str,
    batch_size: int,
    epochs: int,
    max_batches_per_epoch: int | None,
    clip_norm: float,
    patience: int,
    rng: np.random.Generator,
    loss_and_grads,
    eval_loss,
    on_epoch_start=None,
    train_windows: np.ndarray | None = None,
) -> TrainResult:
    """SGD with momentum over sliding windows; keeps the best-validation weights."""
    windows = window_index(xs, window, offset) if train_windows is None else train_windows
    if len(windows) == 0:
        raise ValueError(f"no training windows: every sequence is shorter than window+offset = {window + offset}")

    val_windows = window_index(val_xs, window, offset) if val_xs else np.zeros((0, 2), dtype=np.int64)
    if len(val_windows) > MAX_VAL_WINDOWS:
        keep = rng.choice(len(val_windows), size=MAX_VAL_WINDOWS, replace=False)
        val_windows = val_windows[np.sort(keep)]

    def validation_loss() -> float:
        losses, weights = [], []
        for start in range(0, len(val_windows), EVAL_BATCH):
            chunk = val_windows[start : start + EVAL_BATCH]
            Xb, Yb = gather_batch(val_xs, val_ys, chunk, window, offset)
            losses.append(eval_loss(params, Xb, Yb))
            weights.append(len(chunk))
        return float(np.average(losses, weights=weights))

    if optimizer == "adam":
        adam = AdamState(params)
        velocity = None
    elif optimizer == "sgd":
        adam = None
        velocity = {k: np.zeros_like(v) for k, v in params.items()}
    else:
        raise ValueError(f"unknown optimizer {optimizer!r}; expected 'adam' or 'sgd'")
    train_curve: list[float] = []
    val_curve: list[float] = []
    best_val = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    stale = 0
    epochs_run = 0

    for epoch in range(epochs):
        if on_epoch_start is not None:
            on_epoch_start(epoch)
        perm = rng.permutation(len(windows))
        if max_batches_per_epoch is not None:
            perm = perm[: max_batches_per_epoch * batch_size]
        batch_losses = []
        for bi, start in enumerate(range(0, len(perm), batch_size)):
            chunk = windows[perm[start : start + batch_size]]
            Xb, Yb = gather_batch(xs, ys, chunk, window, offset)
            loss, grads = loss_and_grads(params, Xb, Yb)
            if not np.isfinite(loss):
                raise RuntimeError(f"NaN loss at epoch {epoch}, batch {bi}")
            clip_gradients(grads, clip_norm)
            if adam is not None:
                adam.update(params, grads, lr)
            else:
                sgd_momentum_update(params, velocity, grads, lr, momentum)
            batch_losses.append(loss)
        epochs_run = epoch + 1
        train_curve.append(float(np.mean(batch_losses)))

        score = validation_loss() if len(val_windows) else train_curve[-1]
        val_curve.append(score)
        if score < best_val - 1e-5:
            best_val = score
            best_params = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break

    return TrainResult(best_params, train_curve, val_curve, float(best_val), epochs_run)
