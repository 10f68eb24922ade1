"""Encoder-decoder translator from embedding windows to symbol windows.

The encoder LSTM folds a window of frame embeddings into its final
(hidden, cell) state; the decoder LSTM unrolls from that state over
one-hot symbol inputs (teacher-forced during training, feeding back its
own argmax at inference) through a projection onto the alphabet.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from ..ioutil import atomic_write_text
from ..validation import check_dim, check_fitted
from .lstm import LstmParams, lstm_backward, lstm_forward, lstm_init, lstm_step
from .run import run_training
from .training import (
    boundary_boosted_index,
    cross_entropy_and_dlogits,
    one_hot,
    softmax,
    validate_sequences,
    window_count,
)

CHECKPOINT_VERSION = 1


def _seq2seq_init(rng: np.random.Generator, embed_dim: int, latent_dim: int, vocab_size: int) -> dict[str, np.ndarray]:
    enc = lstm_init(embed_dim, latent_dim, rng)
    dec = lstm_init(vocab_size + 1, latent_dim, rng)  # +1 for the start token
    bound = 1.0 / np.sqrt(latent_dim)
    return {
        "enc_W": enc.W,
        "enc_U": enc.U,
        "enc_b": enc.b,
        "dec_W": dec.W,
        "dec_U": dec.U,
        "dec_b": dec.b,
        "proj_W": rng.uniform(-bound, bound, size=(latent_dim, vocab_size)),
        "proj_b": rng.uniform(-bound, bound, size=(vocab_size,)),
    }


def seq2seq_loss_and_grads(
    params: dict[str, np.ndarray],
    Xb: np.ndarray,
    Yb: np.ndarray,
    vocab_size: int,
    self_feed_prob: float = 0.0,
    rng: np.random.Generator | None = None,
):
    """Mean cross-entropy and gradients for every weight.

    Decoder inputs are the shifted targets (teacher forcing); with
    ``self_feed_prob`` > 0, each step instead feeds back the decoder's own
    argmax with that probability, which keeps free-running inference
    calibrated (gradients treat the fed-back inputs as constants).
    """
    enc = LstmParams(params["enc_W"], params["enc_U"], params["enc_b"])
    dec = LstmParams(params["dec_W"], params["dec_U"], params["dec_b"])
    B, T = Yb.shape
    sos = np.full((B, 1), vocab_size, dtype=np.int64)
    _, (hT, cT), cache_e = lstm_forward(enc, Xb)

    if self_feed_prob > 0.0 and rng is not None:
        prev = sos[:, 0]
        h, c = hT, cT
        dec_in = np.empty((B, T, vocab_size + 1))
        Hd = np.empty((B, T, dec.hidden_dim))
        gates = []
        for t in range(T):
            x = one_hot(prev, vocab_size + 1)
            dec_in[:, t] = x
            h, c_new, gate = lstm_step(dec, x, h, c)
            Hd[:, t] = h
            gates.append(gate)
            c = c_new
            if t + 1 < T and rng.random() < self_feed_prob:
                prev = np.argmax(h @ params["proj_W"] + params["proj_b"], axis=1)
            else:
                prev = Yb[:, t]
        cache_d = (dec_in, hT, cT, Hd, gates)
    else:
        dec_in = one_hot(np.concatenate([sos, Yb[:, :-1]], axis=1), vocab_size + 1)
        Hd, _, cache_d = lstm_forward(dec, dec_in, h0=hT, c0=cT)

    logits = Hd @ params["proj_W"] + params["proj_b"]
    loss, dlogits = cross_entropy_and_dlogits(logits, Yb)

    H = Hd.shape[-1]
    flat_H = Hd.reshape(B * T, H)
    flat_dl = dlogits.reshape(B * T, -1)
    grads = {"proj_W": flat_H.T @ flat_dl, "proj_b": flat_dl.sum(axis=0)}
    dHd = dlogits @ params["proj_W"].T
    gd, _, dh0, dc0 = lstm_backward(dec, cache_d, dHd)
    ge, _, _, _ = lstm_backward(enc, cache_e, None, dh_last=dh0, dc_last=dc0)
    grads.update({"enc_W": ge["W"], "enc_U": ge["U"], "enc_b": ge["b"]})
    grads.update({"dec_W": gd["W"], "dec_U": gd["U"], "dec_b": gd["b"]})
    return loss, grads


def seq2seq_free_run_ids(params: dict[str, np.ndarray], Xb: np.ndarray, steps: int, vocab_size: int) -> np.ndarray:
    """Free-running decode: encode each window, feed back argmax symbols."""
    enc = LstmParams(params["enc_W"], params["enc_U"], params["enc_b"])
    dec = LstmParams(params["dec_W"], params["dec_U"], params["dec_b"])
    _, (h, c), _ = lstm_forward(enc, Xb)
    B = Xb.shape[0]
    prev = np.full(B, vocab_size, dtype=np.int64)
    ids = np.empty((B, steps), dtype=np.int64)
    for t in range(steps):
        x = one_hot(prev, vocab_size + 1)
        h, c, _ = lstm_step(dec, x, h, c)
        prev = np.argmax(h @ params["proj_W"] + params["proj_b"], axis=1)
        ids[:, t] = prev
    return ids


def seq2seq_tail_error(params, Xb, Yb, vocab_size: int) -> float:
    """Fraction of windows whose free-running final symbol misses its
    target — the quantity inference actually uses."""
    ids = seq2seq_free_run_ids(params, Xb, Yb.shape[1], vocab_size)
    return float((ids[:, -1] != Yb[:, -1]).mean())


def seq2seq_eval_loss(params, Xb, Yb, vocab_size: int) -> float:
    enc = LstmParams(params["enc_W"], params["enc_U"], params["enc_b"])
    dec = LstmParams(params["dec_W"], params["dec_U"], params["dec_b"])
    B, T = Yb.shape
    sos = np.full((B, 1), vocab_size, dtype=np.int64)
    dec_in = one_hot(np.concatenate([sos, Yb[:, :-1]], axis=1), vocab_size + 1)
    _, (hT, cT), _ = lstm_forward(enc, Xb)
    Hd, _, _ = lstm_forward(dec, dec_in, h0=hT, c0=cT)
    logits = Hd @ params["proj_W"] + params["proj_b"]
    loss, _ = cross_entropy_and_dlogits(logits, Yb)
    return loss


class Seq2SeqTranslator(BaseEstimator):
    """Sequence-to-sequence symbol predictor over sliding windows.

    ``fit`` consumes lists of per-episode embedding matrices and label
    vectors; windows of length ``window`` are paired with targets shifted
    ``offset`` steps into the future.
    """

    kind = "seq2seq"

    def __init__(
        self,
        vocab_size: int,
        embed_dim: int = 16,
        latent_dim: int = 64,
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
        self_feed_prob: float = 0.0,
        self_feed_ramp_epochs: int = 10,
        alphabet_id: str = "",
        task_id: str = "",
        seed: int = 0,
    ):
        self.vocab_size = vocab_size
        self.embed_dim = embed_dim
        self.latent_dim = latent_dim
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
        self.self_feed_prob = self_feed_prob
        self.self_feed_ramp_epochs = self_feed_ramp_epochs
        self.alphabet_id = alphabet_id
        self.task_id = task_id
        self.seed = seed
        self.params_: dict[str, np.ndarray] | None = None

    # -- training ------------------------------------------------------

    def _init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        check_dim(self.vocab_size, "vocab_size", 2)
        check_dim(self.latent_dim, "latent_dim")
        check_dim(self.offset, "offset")
        return _seq2seq_init(rng, self.embed_dim, self.latent_dim, self.vocab_size)

    def fit(self, X, y, X_val=None, y_val=None) -> "Seq2SeqTranslator":
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

        # decoder self-feeding ramps in over the first epochs
        feed = {"p": 0.0}

        def on_epoch_start(epoch: int) -> None:
            ramp = max(1, self.self_feed_ramp_epochs)
            feed["p"] = min(1.0, epoch / ramp) * self.self_feed_prob

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
            loss_and_grads=lambda p, Xb, Yb: seq2seq_loss_and_grads(
                p, Xb, Yb, self.vocab_size, self_feed_prob=feed["p"], rng=rng
            ),
            eval_loss=lambda p, Xb, Yb: seq2seq_tail_error(p, Xb, Yb, self.vocab_size),
            on_epoch_start=on_epoch_start,
            train_windows=boundary_boosted_index(ys, self.window, self.offset),
        )
        self.params_ = result.params
        self.train_curve_ = result.train_curve
        self.val_curve_ = result.val_curve
        self.best_val_loss_ = result.best_val_loss
        self.epochs_run_ = result.epochs_run
        return self

    # -- inference -----------------------------------------------------

    def _encoder(self) -> LstmParams:
        check_fitted(self, "params_")
        return LstmParams(self.params_["enc_W"], self.params_["enc_U"], self.params_["enc_b"])

    def _decoder(self) -> LstmParams:
        return LstmParams(self.params_["dec_W"], self.params_["dec_U"], self.params_["dec_b"])

    def encode(self, embeddings) -> np.ndarray:
        """Fold embeddings into the encoder state vector [h_T, c_T].

        Accepts one window (T, E) or a batch (B, T, E); returns (2*latent,)
        or (B, 2*latent).
        """
        X = np.asarray(embeddings, dtype=float)
        single = X.ndim == 2
        if single:
            X = X[None]
        if X.ndim != 3 or X.shape[1] == 0:
            raise ValueError(f"need a nonempty (T, E) or (B, T, E) input, got shape {X.shape}")
        if X.shape[2] != self.embed_dim:
            raise ValueError(f"embedding dim {X.shape[2]} != model dim {self.embed_dim}")
        _, (h, c), _ = lstm_forward(self._encoder(), X)
        S = np.concatenate([h, c], axis=1)
        return S[0] if single else S

    def decode(self, S, targets=None, length: int | None = None) -> np.ndarray:
        """Unroll the decoder from state vector S.

        With ``targets``: teacher-forced (input at step i is target i-1,
        start token first). With ``length``: free-running, feeding back the
        argmax. Returns per-step distributions (..., steps, vocab).
        """
        S = np.asarray(S, dtype=float)
        single = S.ndim == 1
        if single:
            S = S[None]
        latent = self.latent_dim
        if S.shape[1] != 2 * latent:
            raise ValueError(f"state vector must have 2*latent = {2 * latent} entries, got {S.shape[1]}")
        h, c = S[:, :latent].copy(), S[:, latent:].copy()
        dec = self._decoder()
        B = S.shape[0]

        if targets is not None:
            targets = np.asarray(targets, dtype=np.int64)
            if targets.ndim == 1:
                targets = targets[None]
            sos = np.full((B, 1), self.vocab_size, dtype=np.int64)
            dec_in = one_hot(np.concatenate([sos, targets[:, :-1]], axis=1), self.vocab_size + 1)
            Hd, _, _ = lstm_forward(dec, dec_in, h0=h, c0=c)
            probs = softmax(Hd @ self.params_["proj_W"] + self.params_["proj_b"])
            return probs[0] if single else probs

        if length is None or length < 1:
            raise ValueError("free-running decode needs a positive length")
        prev = np.full(B, self.vocab_size, dtype=np.int64)
        steps = []
        for _ in range(length):
            x = one_hot(prev, self.vocab_size + 1)
            h, c, _ = lstm_step(dec, x, h, c)
            p = softmax(h @ self.params_["proj_W"] + self.params_["proj_b"])
            steps.append(p)
            prev = np.argmax(p, axis=1)
        probs = np.stack(steps, axis=1)
        return probs[0] if single else probs

    def predict_tail(self, windows: np.ndarray, k: int) -> np.ndarray:
        """Free-run each window's decode and keep the last k symbols —
        the ones offset past the window's end (times t+1 .. t+k)."""
        windows = np.asarray(windows, dtype=float)
        if windows.ndim == 2:
            windows = windows[None]
        if k < 1 or k > self.window:
            raise ValueError(f"k must be in 1..{self.window}")
        S = self.encode(windows)
        probs = self.decode(S, length=self.window)
        ids = np.argmax(probs, axis=2)
        return ids[:, self.window - k :]

    def predict(self, windows: np.ndarray) -> np.ndarray:
        """Next symbol (one step past each window) for a batch of windows."""
        return self.predict_tail(windows, self.offset)[:, 0]

    def predict_next(self, history, k: int | None = None) -> list[int]:
        """The k future symbols after an embedding history of length >= window."""
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

    # -- persistence ---------------------------------------------------

    def save(self, path: str | Path) -> None:
        check_fitted(self, "params_")
        payload = {
            "version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "dims": {
                "vocab_size": self.vocab_size,
                "embed_dim": self.embed_dim,
                "latent_dim": self.latent_dim,
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
    def load(cls, path: str | Path) -> "Seq2SeqTranslator":
        payload = json.loads(Path(path).read_text())
        if payload.get("kind") != cls.kind:
            raise ValueError(f"{path} is not a {cls.kind} checkpoint")
        dims = payload["dims"]
        model = cls(
            vocab_size=dims["vocab_size"],
            embed_dim=dims["embed_dim"],
            latent_dim=dims["latent_dim"],
            window=payload["window"],
            offset=payload["offset"],
            alphabet_id=payload.get("alphabet_id", ""),
            task_id=payload.get("task", ""),
            seed=payload.get("seed", 0),
        )
        model.params_ = {k: np.asarray(v, dtype=float) for k, v in payload["weights"].items()}
        model.best_val_loss_ = payload.get("val_loss")
        return model
