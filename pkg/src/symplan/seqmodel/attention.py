"""Many-to-many LSTM tagger with additive soft attention.

A single recurrent layer produces one annotation per input step; each
step's output head sees its own annotation concatenated with an
attention-weighted mix of all annotations. One symbol distribution is
emitted per input step and scored against the offset-shifted targets.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from ..ioutil import atomic_write_text
from ..validation import check_dim, check_fitted
from .lstm import LstmParams, lstm_backward, lstm_forward, lstm_init
from .run import run_training
from .training import cross_entropy_and_dlogits, softmax, validate_sequences, window_count

CHECKPOINT_VERSION = 1


def _attn_init(rng: np.random.Generator, embed_dim: int, latent_dim: int, attn_dim: int, vocab_size: int):
    cell = lstm_init(embed_dim, latent_dim, rng)
    b_lat = 1.0 / np.sqrt(latent_dim)
    b_attn = 1.0 / np.sqrt(attn_dim)
    return {
        "W": cell.W,
        "U": cell.U,
        "b": cell.b,
        "Wq": rng.uniform(-b_lat, b_lat, size=(latent_dim, attn_dim)),
        "Wk": rng.uniform(-b_lat, b_lat, size=(latent_dim, attn_dim)),
        "ba": rng.uniform(-b_attn, b_attn, size=(attn_dim,)),
        "v": rng.uniform(-b_attn, b_attn, size=(attn_dim,)),
        "Wo": rng.uniform(-b_lat, b_lat, size=(2 * latent_dim, vocab_size)),
        "bo": rng.uniform(-b_lat, b_lat, size=(vocab_size,)),
    }


def attn_forward(params: dict[str, np.ndarray], Xb: np.ndarray):
    """Per-step logits plus the tensors the backward pass needs."""
    cell = LstmParams(params["W"], params["U"], params["b"])
    Hs, _, cache = lstm_forward(cell, Xb)  # (B, T, H)
    Q = Hs @ params["Wq"]  # (B, T, Ha)
    K = Hs @ params["Wk"]
    E = np.tanh(Q[:, :, None, :] + K[:, None, :, :] + params["ba"])  # (B, T, T, Ha)
    scores = E @ params["v"]  # (B, T, T): query step x annotation step
    alpha = softmax(scores)
    context = alpha @ Hs  # (B, T, H)
    HC = np.concatenate([Hs, context], axis=2)
    logits = HC @ params["Wo"] + params["bo"]
    return logits, (Hs, cache, E, alpha, HC)


def attn_loss_and_grads(params: dict[str, np.ndarray], Xb: np.ndarray, Yb: np.ndarray):
    logits, (Hs, cache, E, alpha, HC) = attn_forward(params, Xb)
    loss, dlogits = cross_entropy_and_dlogits(logits, Yb)
    B, T, H = Hs.shape
    Ha = E.shape[-1]

    flat_HC = HC.reshape(B * T, 2 * H)
    flat_dl = dlogits.reshape(B * T, -1)
    grads = {"Wo": flat_HC.T @ flat_dl, "bo": flat_dl.sum(axis=0)}
    dHC = (dlogits @ params["Wo"].T).reshape(B, T, 2 * H)
    dHs = dHC[:, :, :H].copy()
    dC = dHC[:, :, H:]

    # context = alpha @ Hs
    dalpha = np.einsum("bth,bjh->btj", dC, Hs)
    dHs += np.einsum("btj,bth->bjh", alpha, dC)
    # softmax over annotation axis j
    dscores = alpha * (dalpha - (dalpha * alpha).sum(axis=2, keepdims=True))
    dE = dscores[..., None] * params["v"]
    dpre = dE * (1.0 - E * E)  # (B, T, T, Ha)
    grads["v"] = np.einsum("btja,btj->a", E, dscores)
    grads["ba"] = dpre.sum(axis=(0, 1, 2))
    dQ = dpre.sum(axis=2)  # (B, T, Ha)
    dK = dpre.sum(axis=1)
    flat_H = Hs.reshape(B * T, H)
    grads["Wq"] = flat_H.T @ dQ.reshape(B * T, Ha)
    grads["Wk"] = flat_H.T @ dK.reshape(B * T, Ha)
    dHs += dQ @ params["Wq"].T + dK @ params["Wk"].T

    cell = LstmParams(params["W"], params["U"], params["b"])
    gcell, _, _, _ = lstm_backward(cell, cache, dHs)
    grads.update({"W": gcell["W"], "U": gcell["U"], "b": gcell["b"]})
    return loss, grads


def attn_eval_loss(params, Xb, Yb) -> float:
    logits, _ = attn_forward(params, Xb)
    loss, _ = cross_entropy_and_dlogits(logits, Yb)
    return loss


class AttentionTagger(BaseEstimator):
    """Attention-over-annotations baseline, one prediction per input step."""

    kind = "attn_lstm"

    def __init__(
        self,
        vocab_size: int,
        embed_dim: int = 16,
        latent_dim: int = 64,
        attn_dim: int = 32,
        window: int = 20,
        offset: int = 1,
        optimizer: str = "adam",
        lr: float = 2e-3,
        momentum: float = 0.9,
        batch_size: int = 128,
        epochs: int = 50,
        max_batches_per_epoch: int | None = 200,
        clip_norm: float = 5.0,
        patience: int = 8,
        val_fraction: float = 0.1,
        alphabet_id: str = "",
        task_id: str = "",
        seed: int = 0,
    ):
        self.vocab_size = vocab_size
        self.embed_dim = embed_dim
        self.latent_dim = latent_dim
        self.attn_dim = attn_dim
        self.window = window
        self.offset = offset
        self.optimizer = optimizer
        self.lr = lr
        self.momentum = momentum
        self.batch_size = batch_size
        self.epochs = epochs
        self.max_batches_per_epoch = max_batches_per_epoch
        self.clip_norm = clip_norm
        self.patience = patience
        self.val_fraction = val_fraction
        self.alphabet_id = alphabet_id
        self.task_id = task_id
        self.seed = seed
        self.params_: dict[str, np.ndarray] | None = None

    def _init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        check_dim(self.vocab_size, "vocab_size", 2)
        check_dim(self.attn_dim, "attn_dim")
        return _attn_init(rng, self.embed_dim, self.latent_dim, self.attn_dim, self.vocab_size)

    def fit(self, X, y, X_val=None, y_val=None) -> "AttentionTagger":
        xs, ys = validate_sequences(X, y, self.vocab_size, self.embed_dim)
        rng = np.random.default_rng(self.seed)
        if X_val is not None:
            val_xs, val_ys = validate_sequences(X_val, y_val, self.vocab_size, self.embed_dim)
        elif self.val_fraction > 0 and len(xs) > 1:
            n_val = max(1, int(len(xs) * self.val_fraction))
            order = rng.permutation(len(xs))
            val_idx = set(order[:n_val].tolist())
            val_xs = [xs[i] for i in sorted(val_idx)]
            val_ys = [ys[i] for i in sorted(val_idx)]
            xs = [xs[i] for i in range(len(xs)) if i not in val_idx]
            ys = [ys[i] for i in range(len(ys)) if i not in val_idx]
        else:
            val_xs, val_ys = [], []

        result = run_training(
            params=self._init_params(rng),
            xs=xs,
            ys=ys,
            val_xs=val_xs,
            val_ys=val_ys,
            window=self.window,
            offset=self.offset,
            lr=self.lr,
            momentum=self.momentum,
            optimizer=self.optimizer,
            batch_size=self.batch_size,
            epochs=self.epochs,
            max_batches_per_epoch=self.max_batches_per_epoch,
            clip_norm=self.clip_norm,
            patience=self.patience,
            rng=rng,
            loss_and_grads=attn_loss_and_grads,
            eval_loss=attn_eval_loss,
        )
        self.params_ = result.params
        self.train_curve_ = result.train_curve
        self.val_curve_ = result.val_curve
        self.best_val_loss_ = result.best_val_loss
        self.epochs_run_ = result.epochs_run
        return self

    def step_distributions(self, windows: np.ndarray) -> np.ndarray:
        """One symbol distribution per input step, (B, T, vocab)."""
        check_fitted(self, "params_")
        windows = np.asarray(windows, dtype=float)
        if windows.ndim == 2:
            windows = windows[None]
        if windows.shape[2] != self.embed_dim:
            raise ValueError(f"embedding dim {windows.shape[2]} != model dim {self.embed_dim}")
        logits, _ = attn_forward(self.params_, windows)
        return softmax(logits)

    def predict_tail(self, windows: np.ndarray, k: int) -> np.ndarray:
        if k < 1 or k > self.window:
            raise ValueError(f"k must be in 1..{self.window}")
        probs = self.step_distributions(windows)
        ids = np.argmax(probs, axis=2)
        return ids[:, self.window - k :]

    def predict(self, windows: np.ndarray) -> np.ndarray:
        return self.predict_tail(windows, self.offset)[:, 0]

    def predict_next(self, history, k: int | None = None) -> list[int]:
        history = np.asarray(history, dtype=float)
        if k is None:
            k = self.offset
        if k != self.offset:
            raise ValueError(f"model was trained with offset {self.offset}; cannot predict {k} ahead")
        if history.ndim != 2 or history.shape[0] < self.window:
            raise ValueError(f"need at least window = {self.window} embeddings, got {history.shape}")
        tail = self.predict_tail(history[-self.window :][None], k)
        return [int(s) for s in tail[0]]

    def window_count(self, n_frames: int) -> int:
        return window_count(n_frames, self.window, self.offset)

    def save(self, path: str | Path) -> None:
        check_fitted(self, "params_")
        payload = {
            "version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "dims": {
                "vocab_size": self.vocab_size,
                "embed_dim": self.embed_dim,
                "latent_dim": self.latent_dim,
                "attn_dim": self.attn_dim,
            },
            "window": self.window,
            "offset": self.offset,
            "alphabet_id": self.alphabet_id,
            "task": self.task_id,
            "seed": self.seed,
            "val_loss": getattr(self, "best_val_loss_", None),
            "weights": {k: v.tolist() for k, v in self.params_.items()},
        }
        atomic_write_text(path, json.dumps(payload))

    @classmethod
    def load(cls, path: str | Path) -> "AttentionTagger":
        payload = json.loads(Path(path).read_text())
        if payload.get("kind") != cls.kind:
            raise ValueError(f"{path} is not an {cls.kind} checkpoint")
        dims = payload["dims"]
        model = cls(
            vocab_size=dims["vocab_size"],
            embed_dim=dims["embed_dim"],
            latent_dim=dims["latent_dim"],
            attn_dim=dims["attn_dim"],
            window=payload["window"],
            offset=payload["offset"],
            alphabet_id=payload.get("alphabet_id", ""),
            task_id=payload.get("task", ""),
            seed=payload.get("seed", 0),
        )
        model.params_ = {k: np.asarray(v, dtype=float) for k, v in payload["weights"].items()}
        model.best_val_loss_ = payload.get("val_loss")
        return model
