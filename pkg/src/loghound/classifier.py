"""Supervised stage: multinomial logistic regression.

Trained full-batch with gradient descent on softmax cross-entropy plus an
L2 penalty (bias column exempt). Weights start at zero, so training is
deterministic; the seed only drives the train/test split. The continuous
class scores double as the audit scores for the fairness module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import DegenerateLabels, DimensionMismatch, NonFiniteLoss, TooFewRows

DEFAULT_LEARNING_RATE = 0.1
DEFAULT_EPOCHS = 500
DEFAULT_L2 = 1e-4
DEFAULT_SPLIT_RATIO = 0.66


@dataclass(frozen=True)
class SplitIndices:
    """Seeded shuffle split; train gets round(ratio * n) rows."""

    train: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class ClassifierModel:
    """Fitted weights (num_classes x (num_features + 1), last column bias)."""

    classes: tuple[Hashable, ...]
    weights: np.ndarray
    training_meta: dict
    loss_history: np.ndarray = field(repr=False, default=None)

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[1]) - 1


def split(n: int, seed: int, ratio: float = DEFAULT_SPLIT_RATIO) -> SplitIndices:
    """Shuffle 0..n-1 with the seed and cut a round(ratio * n) prefix for training."""
    if n < 3:
        raise TooFewRows(f"need at least 3 rows to split, got {n}")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must be in (0, 1), got {ratio}")
    n_train = int(math.floor(ratio * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    return SplitIndices(train=perm[:n_train], test=perm[n_train:])


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_gradient(
    weights: np.ndarray,
    X_aug: np.ndarray,
    y_idx: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy + (l2/2)*||W||^2 over non-bias columns, with its gradient.

    Exposed separately so the analytic gradient can be checked against
    finite differences at arbitrary weight settings.
    """
    n = X_aug.shape[0]
    logp = _log_softmax(X_aug @ weights.T)
    penalty_w = weights.copy()
    penalty_w[:, -1] = 0.0
    loss = -float(logp[np.arange(n), y_idx].mean()) + 0.5 * l2 * float((penalty_w ** 2).sum())
    probs = np.exp(logp)
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y_idx] = 1.0
    grad = (probs - onehot).T @ X_aug / n + l2 * penalty_w
    return loss, grad


def train(
    X: np.ndarray,
    y: Sequence[Hashable],
    learning_rate: float = DEFAULT_LEARNING_RATE,
    epochs: int = DEFAULT_EPOCHS,
    l2: float = DEFAULT_L2,
    seed: int = 0,
) -> ClassifierModel:
    """Fit the softmax classifier; raises ``DegenerateLabels`` on one class.

    Loss non-increase across epochs is asserted, which holds for the default
    step size on min-max scaled features.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionMismatch(f"X shape {X.shape} vs {len(y)} labels")
    classes = tuple(sorted(set(y), key=lambda c: str(c)))
    if len(classes) < 2:
        raise DegenerateLabels(f"need >= 2 distinct labels, got {classes}")
    index_of = {label: i for i, label in enumerate(classes)}
    y_idx = np.array([index_of[label] for label in y], dtype=np.intp)

    X_aug = _augment(X)
    weights = np.zeros((len(classes), X_aug.shape[1]), dtype=np.float64)
    history = np.empty(epochs + 1, dtype=np.float64)
    loss, grad = loss_and_gradient(weights, X_aug, y_idx, l2)
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"initial loss is {loss}")
    history[0] = loss
    for epoch in range(epochs):
        weights = weights - learning_rate * grad
        loss, grad = loss_and_gradient(weights, X_aug, y_idx, l2)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} at epoch {epoch + 1}")
        assert loss <= history[epoch] + 1e-9 * max(1.0, abs(history[epoch])), \
            f"loss increased at epoch {epoch + 1}"
        history[epoch + 1] = loss

    meta = {
        "seed": seed,
        "epochs": epochs,
        "learning_rate": learning_rate,
        "l2": l2,
        "final_loss": float(history[-1]),
    }
    return ClassifierModel(classes=classes, weights=weights,
                           training_meta=meta, loss_history=history)


def predict_proba(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    """(n, num_classes) probability rows for a feature matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"X shape {X.shape} vs {model.n_features} features")
    return np.exp(_log_softmax(_augment(X) @ model.weights.T))


def predict(model: ClassifierModel, x: np.ndarray) -> tuple[Hashable, np.ndarray]:
    """Label and per-class scores for one feature row (ties to lowest class index)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D feature row, got shape {x.shape}")
    scores = predict_proba(model, x[None, :])[0]
    return model.classes[int(np.argmax(scores))], scores


def accuracy(model: ClassifierModel, X: np.ndarray, y: Sequence[Hashable]) -> float:
    """Fraction of rows whose argmax class matches the given label."""
    probs = predict_proba(model, X)
    predicted = [model.classes[i] for i in np.argmax(probs, axis=1)]
    return sum(1 for p, t in zip(predicted, y) if p == t) / len(y)


def save_model(model: ClassifierModel, path) -> None:
    """Serialize in the same plain-text style as the K-means models."""
    meta = model.training_meta
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("kind=classifier\n")
        fh.write("classes=" + ",".join(str(c) for c in model.classes) + "\n")
        for key in ("seed", "epochs", "learning_rate", "l2", "final_loss"):
            fh.write(f"{key}={meta[key]!r}\n")
        for row in model.weights:
            fh.write("weights " + " ".join(repr(float(v)) for v in row) + "\n")


def load_model(path) -> ClassifierModel:
    """Load a serialized model; classes come back as strings."""
    meta: dict[str, str] = {}
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("weights "):
                rows.append([float(v) for v in line.split()[1:]])
            elif "=" in line:
                key, value = line.split("=", 1)
                meta[key] = value
    if meta.get("kind") != "classifier":
        raise ValueError(f"not a classifier model file: {path}")
    training_meta = {
        "seed": int(meta["seed"]),
        "epochs": int(meta["epochs"]),
        "learning_rate": float(meta["learning_rate"]),
        "l2": float(meta["l2"]),
        "final_loss": float(meta["final_loss"]),
    }
    return ClassifierModel(
        classes=tuple(meta["classes"].split(",")),
        weights=np.array(rows, dtype=np.float64),
        training_meta=training_meta,
    )
