"""Frame observations and the per-frame symbol classifier.

``render_observation`` turns a world state into a noisy feature vector (the
stand-in for a camera frame). ``FrameClassifier`` is a small MLP trained
against per-frame action symbols; its 16-dimensional final layer doubles as
the frame embedding consumed by the sequence models.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .ioutil import atomic_write_text
from .validation import as_float_matrix, as_labels, check_dim, check_fitted

CHECKPOINT_VERSION = 1


def render_observation(state, noise_std: float = 0.05, rng=None) -> np.ndarray:
    """Feature vector for one frame: state features plus Gaussian noise.

    Deterministic for a given (state, seed); pass ``noise_std=0`` for the
    pure state encoding.
    """
    feats = state.feature_vector()
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    if noise_std > 0:
        if rng is None or isinstance(rng, (int, np.integer)):
            rng = np.random.default_rng(0 if rng is None else int(rng))
        feats = feats + rng.normal(0.0, noise_std, size=feats.shape)
    return feats


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def classifier_forward(params: dict[str, np.ndarray], X: np.ndarray):
    """Forward pass; returns (probabilities, embeddings, cache)."""
    z = np.tanh(X @ params["W1"] + params["b1"])
    emb = z @ params["W2"] + params["b2"]
    logits = emb @ params["W3"] + params["b3"]
    probs = _softmax(logits)
    return probs, emb, (X, z, emb)


def classifier_loss_and_grads(params: dict[str, np.ndarray], X: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and hand-derived gradients for every parameter."""
    n = X.shape[0]
    probs, emb, (X, z, _) = classifier_forward(params, X)
    loss = -np.log(probs[np.arange(n), y] + 1e-12).mean()

    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    grads = {"W3": emb.T @ dlogits, "b3": dlogits.sum(axis=0)}
    demb = dlogits @ params["W3"].T
    grads["W2"] = z.T @ demb
    grads["b2"] = demb.sum(axis=0)
    dz = demb @ params["W2"].T
    da = dz * (1.0 - z * z)
    grads["W1"] = X.T @ da
    grads["b1"] = da.sum(axis=0)
    return loss, grads


class FrameClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Two-layer MLP symbol classifier whose final layer is the embedding.

    ``transform`` returns the pre-softmax 16-dim final-layer activations;
    ``predict`` returns symbol ids. Trained with minibatch SGD + momentum.
    """

    def __init__(
        self,
        n_classes: int | None = None,
        hidden_dim: int = 64,
        embed_dim: int = 16,
        lr: float = 1e-2,
        momentum: float = 0.9,
        batch_size: int = 64,
        max_epochs: int = 200,
        tol: float = 1e-4,
        patience: int = 5,
        seed: int = 0,
    ):
        self.n_classes = n_classes
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.lr = lr
        self.momentum = momentum
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.tol = tol
        self.patience = patience
        self.seed = seed
        self.params_: dict[str, np.ndarray] | None = None

    def _init_params(self, n_features: int, n_classes: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        h = check_dim(self.hidden_dim, "hidden_dim")
        e = check_dim(self.embed_dim, "embed_dim")
        return {
            "W1": _uniform_init(rng, n_features, (n_features, h)),
            "b1": _uniform_init(rng, n_features, (h,)),
            "W2": _uniform_init(rng, h, (h, e)),
            "b2": _uniform_init(rng, h, (e,)),
            "W3": _uniform_init(rng, e, (e, n_classes)),
            "b3": _uniform_init(rng, e, (n_classes,)),
        }

    def fit(self, X, y) -> "FrameClassifier":
        X = as_float_matrix(X)
        y = as_labels(y, self.n_classes)
        n_classes = self.n_classes if self.n_classes is not None else int(y.max()) + 1
        rng = np.random.default_rng(self.seed)
        params = self._init_params(X.shape[1], n_classes, rng)
        velocity = {k: np.zeros_like(v) for k, v in params.items()}

        n = X.shape[0]
        batch = max(1, min(self.batch_size, n))
        history: list[float] = []
        stale = 0
        for _ in range(self.max_epochs):
            perm = rng.permutation(n)
            losses = []
            for start in range(0, n, batch):
                idx = perm[start : start + batch]
                loss, grads = classifier_loss_and_grads(params, X[idx], y[idx])
                for k in params:
                    velocity[k] = self.momentum * velocity[k] - self.lr * grads[k]
                    params[k] += velocity[k]
                losses.append(loss)
            epoch_loss = float(np.mean(losses))
            if history and history[-1] - epoch_loss < self.tol:
                stale += 1
            else:
                stale = 0
            history.append(epoch_loss)
            if epoch_loss < 1e-5 or stale >= self.patience:
                break

        self.params_ = params
        self.n_classes_ = n_classes
        self.n_features_ = X.shape[1]
        self.loss_curve_ = history
        self.train_accuracy_ = float((self.predict(X) == y).mean())
        return self

    def _check_input(self, X) -> np.ndarray:
        check_fitted(self, "params_")
        X = as_float_matrix(X)
        if X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got {X.shape[1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        probs, _, _ = classifier_forward(self.params_, X)
        return probs

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def transform(self, X) -> np.ndarray:
        """Frame embeddings: activations of the final (pre-softmax) layer."""
        X = self._check_input(X)
        _, emb, _ = classifier_forward(self.params_, X)
        return emb

    def embed(self, obs) -> np.ndarray:
        """Single-observation convenience wrapper around ``transform``."""
        return self.transform(np.asarray(obs, dtype=float)[None, :])[0]

    def save(self, path: str | Path) -> None:
        check_fitted(self, "params_")
        payload = {
            "version": CHECKPOINT_VERSION,
            "kind": "frame_classifier",
            "dims": {
                "n_features": self.n_features_,
                "hidden_dim": self.hidden_dim,
                "embed_dim": self.embed_dim,
                "n_classes": self.n_classes_,
            },
            "seed": self.seed,
            "train_accuracy": self.train_accuracy_,
            "weights": {k: v.tolist() for k, v in self.params_.items()},
        }
        atomic_write_text(path, json.dumps(payload))

    @classmethod
    def load(cls, path: str | Path) -> "FrameClassifier":
        payload = json.loads(Path(path).read_text())
        if payload.get("kind") != "frame_classifier":
            raise ValueError(f"{path} is not a frame classifier checkpoint")
        dims = payload["dims"]
        clf = cls(
            n_classes=dims["n_classes"],
            hidden_dim=dims["hidden_dim"],
            embed_dim=dims["embed_dim"],
            seed=payload.get("seed", 0),
        )
        clf.params_ = {k: np.asarray(v, dtype=float) for k, v in payload["weights"].items()}
        clf.n_classes_ = dims["n_classes"]
        clf.n_features_ = dims["n_features"]
        clf.train_accuracy_ = payload.get("train_accuracy", float("nan"))
        return clf
