"""Batched LSTM cell with a hand-derived backward pass.

Gate preactivations are stacked (input, forget, candidate, output) so each
step is two matmuls. The backward pass accumulates per-step gate gradients
and folds the weight gradients into three large matmuls at the end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LstmParams:
    """Weights of one LSTM cell: W (input, 4*hidden), U (hidden, 4*hidden), b (4*hidden,)."""

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.W.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[0]

    def copy(self) -> "LstmParams":
        return LstmParams(self.W.copy(), self.U.copy(), self.b.copy())


def lstm_init(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmParams:
    def uniform(fan_in, shape):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    return LstmParams(
        W=uniform(input_dim, (input_dim, 4 * hidden_dim)),
        U=uniform(hidden_dim, (hidden_dim, 4 * hidden_dim)),
        b=uniform(hidden_dim, (4 * hidden_dim,)),
    )


def lstm_step(params: LstmParams, x: np.ndarray, h: np.ndarray, c: np.ndarray):
    """One cell step for inputs x (B, D); returns (h', c', gate cache)."""
    hd = params.hidden_dim
    a = x @ params.W + h @ params.U + params.b
    i = sigmoid(a[:, :hd])
    f = sigmoid(a[:, hd : 2 * hd])
    g = np.tanh(a[:, 2 * hd : 3 * hd])
    o = sigmoid(a[:, 3 * hd :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (i, f, g, o, c, tc)


def lstm_forward(params: LstmParams, X: np.ndarray, h0: np.ndarray | None = None, c0: np.ndarray | None = None):
    """Run the cell over X (B, T, D); returns (H (B,T,Hd), (h_T, c_T), cache)."""
    B, T, _ = X.shape
    hd = params.hidden_dim
    h = np.zeros((B, hd)) if h0 is None else h0
    c = np.zeros((B, hd)) if c0 is None else c0
    h0_used, c0_used = h, c

    pre = X.reshape(B * T, -1) @ params.W
    pre = pre.reshape(B, T, 4 * hd) + params.b

    Hs = np.empty((B, T, hd))
    gates = []
    for t in range(T):
        a = pre[:, t] + h @ params.U
        i = sigmoid(a[:, :hd])
        f = sigmoid(a[:, hd : 2 * hd])
        g = np.tanh(a[:, 2 * hd : 3 * hd])
        o = sigmoid(a[:, 3 * hd :])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h = o * tc
        Hs[:, t] = h
        gates.append((i, f, g, o, c, tc))
        c = c_new
    cache = (X, h0_used, c0_used, Hs, gates)
    return Hs, (h, c), cache


def lstm_backward(params: LstmParams, cache, dHs: np.ndarray | None, dh_last: np.ndarray | None = None, dc_last: np.ndarray | None = None):
    """Backprop through time.

    dHs carries per-step gradients flowing into each h_t from outside;
    dh_last / dc_last are extra gradients on the final state. Returns a
    grads dict for W/U/b, plus dX and the gradients on (h0, c0).
    """
    X, h0, c0, Hs, gates = cache
    B, T, _ = X.shape
    hd = params.hidden_dim

    dh = np.zeros((B, hd)) if dh_last is None else dh_last.copy()
    dc = np.zeros((B, hd)) if dc_last is None else dc_last.copy()
    dAs = np.empty((B, T, 4 * hd))
    for t in range(T - 1, -1, -1):
        i, f, g, o, c_prev, tc = gates[t]
        dh_total = dh if dHs is None else dh + dHs[:, t]
        do = dh_total * tc
        dc_total = dc + dh_total * o * (1.0 - tc * tc)
        di = dc_total * g
        df = dc_total * c_prev
        dg = dc_total * i
        dc = dc_total * f
        dAs[:, t, :hd] = di * i * (1.0 - i)
        dAs[:, t, hd : 2 * hd] = df * f * (1.0 - f)
        dAs[:, t, 2 * hd : 3 * hd] = dg * (1.0 - g * g)
        dAs[:, t, 3 * hd :] = do * o * (1.0 - o)
        dh = dAs[:, t] @ params.U.T

    H_prev = np.concatenate([h0[:, None, :], Hs[:, :-1]], axis=1)
    flat_dA = dAs.reshape(B * T, 4 * hd)
    grads = {
        "W": X.reshape(B * T, -1).T @ flat_dA,
        "U": H_prev.reshape(B * T, hd).T @ flat_dA,
        "b": flat_dA.sum(axis=0),
    }
    dX = (flat_dA @ params.W.T).reshape(X.shape)
    return grads, dX, dh, dc
