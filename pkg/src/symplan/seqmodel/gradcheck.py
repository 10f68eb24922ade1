"""Central-finite-difference verification of the hand-derived gradients."""

from __future__ import annotations

import numpy as np

from ..embedder import classifier_loss_and_grads
from .attention import _attn_init, attn_loss_and_grads
from .seq2seq import _seq2seq_init, seq2seq_loss_and_grads

GUARD = 1e-12  # skip directions where both gradients vanish


def finite_difference_error(loss_and_grads, params: dict[str, np.ndarray], eps: float = 1e-5) -> float:
    """Max relative error |fd - analytic| / (|fd| + |analytic|) over every entry."""
    _, analytic = loss_and_grads(params)
    worst = 0.0
    for name, arr in params.items():
        flat = arr.ravel()
        grad = analytic[name].ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            plus = loss_and_grads(params)[0]
            flat[idx] = orig - eps
            minus = loss_and_grads(params)[0]
            flat[idx] = orig
            fd = (plus - minus) / (2.0 * eps)
            denom = abs(fd) + abs(grad[idx])
            if denom < GUARD:
                continue
            worst = max(worst, abs(fd - grad[idx]) / denom)
    return worst


def grad_check(model_kind: str, seed: int = 0, eps: float = 1e-5) -> float:
    """Build a tiny instance of the named model and return its max relative
    gradient error against central differences.

    The check point is sampled with unit-scale weights rather than the
    training initialization: near-uniform attention/gates leave some
    gradient entries below the finite-difference noise floor
    (~|loss| * 1e-16 / eps), which would measure rounding error, not the
    backward pass.
    """
    rng = np.random.default_rng(seed)
    if model_kind == "seq2seq":
        embed, latent, vocab, sl, batch = 3, 4, 3, 4, 2
        params = _seq2seq_init(rng, embed, latent, vocab)
        Xb = rng.normal(size=(batch, sl, embed))
        Yb = rng.integers(0, vocab, size=(batch, sl))
        fn = lambda p: seq2seq_loss_and_grads(p, Xb, Yb, vocab)
    elif model_kind == "attn_lstm":
        embed, latent, attn, vocab, sl, batch = 3, 4, 3, 3, 4, 2
        params = _attn_init(rng, embed, latent, attn, vocab)
        Xb = rng.normal(size=(batch, sl, embed))
        Yb = rng.integers(0, vocab, size=(batch, sl))
        fn = lambda p: attn_loss_and_grads(p, Xb, Yb)
    elif model_kind == "frame_classifier":
        d_obs, hidden, embed, vocab, batch = 4, 3, 3, 3, 8
        params = {
            "W1": np.zeros((d_obs, hidden)),
            "b1": np.zeros(hidden),
            "W2": np.zeros((hidden, embed)),
            "b2": np.zeros(embed),
            "W3": np.zeros((embed, vocab)),
            "b3": np.zeros(vocab),
        }
        Xb = rng.normal(size=(batch, d_obs))
        Yb = rng.integers(0, vocab, size=batch)
        fn = lambda p: classifier_loss_and_grads(p, Xb, Yb)
    else:
        raise ValueError(f"unknown model kind {model_kind!r}")
    for name in params:
        params[name] = rng.normal(0.0, 1.0, size=params[name].shape)
    return finite_difference_error(fn, params, eps=eps)
