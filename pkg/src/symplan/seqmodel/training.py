"""Shared window extraction and SGD machinery for the sequence models."""

from __future__ import annotations

import numpy as np

from ..validation import as_labels


def window_count(n_frames: int, window: int, offset: int) -> int:
    """Number of stride-1 training windows a sequence of n_frames yields."""
    return max(0, n_frames - window - offset + 1)


def validate_sequences(X, y, vocab_size: int, embed_dim: int):
    """Normalize a corpus of (embeddings, labels) sequence pairs."""
    if len(X) != len(y):
        raise ValueError(f"got {len(X)} embedding sequences but {len(y)} label sequences")
    if len(X) == 0:
        raise ValueError("empty corpus")
    xs, ys = [], []
    for idx, (ex, ey) in enumerate(zip(X, y)):
        ex = np.asarray(ex, dtype=float)
        if ex.ndim != 2 or ex.shape[1] != embed_dim:
            raise ValueError(f"sequence {idx}: embeddings must be (T, {embed_dim}), got {ex.shape}")
        if not np.all(np.isfinite(ex)):
            raise ValueError(f"sequence {idx}: non-finite embeddings")
        ey = as_labels(ey, vocab_size, name=f"labels[{idx}]")
        if len(ey) != len(ex):
            raise ValueError(f"sequence {idx}: {len(ex)} frames but {len(ey)} labels")
        xs.append(ex)
        ys.append(ey)
    return xs, ys


def window_index(seqs: list[np.ndarray], window: int, offset: int) -> np.ndarray:
    """(sequence, start) pairs for every stride-1 window with full targets."""
    pairs = []
    for si, seq in enumerate(seqs):
        for start in range(window_count(len(seq), window, offset)):
            pairs.append((si, start))
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def boundary_boosted_index(ys: list[np.ndarray], window: int, offset: int, boost: int = 3) -> np.ndarray:
    """Training window index with label-boundary windows replicated.

    Windows whose final targets straddle a symbol switch carry the hard
    decisions (when to hand over to the next symbol); replicating them
    sharpens exactly those posteriors without touching the window count
    semantics.
    """
    pairs = []
    for si, labels in enumerate(ys):
        for start in range(window_count(len(labels), window, offset)):
            tail = labels[start + offset + window - 4 : start + offset + window]
            copies = boost if len(set(tail.tolist())) > 1 else 1
            pairs.extend([(si, start)] * copies)
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def gather_batch(xs, ys, pairs: np.ndarray, window: int, offset: int):
    """Stack the windows named by ``pairs`` into (B, SL, E) inputs and (B, SL) targets."""
    Xb = np.stack([xs[si][s : s + window] for si, s in pairs])
    Yb = np.stack([ys[si][s + offset : s + window + offset] for si, s in pairs])
    return Xb, Yb


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> None:
    if max_norm <= 0:
        return
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale


def sgd_momentum_update(params: dict[str, np.ndarray], velocity: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float, momentum: float) -> None:
    for name in params:
        velocity[name] = momentum * velocity[name] - lr * grads[name]
        params[name] += velocity[name]


class AdamState:
    def __init__(self, params: dict[str, np.ndarray], beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def update(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        correction = np.sqrt(1.0 - b2**self.t) / (1.0 - b1**self.t)
        for name in params:
            g = grads[name]
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * (g * g)
            params[name] -= lr * correction * self.m[name] / (np.sqrt(self.v[name]) + self.eps)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_and_dlogits(logits: np.ndarray, targets: np.ndarray):
    """Mean CE over all positions and its gradient w.r.t. the logits.

    logits: (B, T, A); targets: (B, T) int.
    """
    B, T, A = logits.shape
    probs = softmax(logits)
    flat = probs.reshape(B * T, A)
    tflat = targets.reshape(B * T)
    loss = float(-np.log(flat[np.arange(B * T), tflat] + 1e-12).mean())
    dlogits = flat.copy()
    dlogits[np.arange(B * T), tflat] -= 1.0
    dlogits /= B * T
    return loss, dlogits.reshape(B, T, A)


def one_hot(ids: np.ndarray, depth: int) -> np.ndarray:
    out = np.zeros(ids.shape + (depth,))
    np.put_along_axis(out, ids[..., None], 1.0, axis=-1)
    return out
