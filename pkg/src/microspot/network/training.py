"""Loss, training loop, and prediction for the sequence classifier."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..validation import check_labels, check_sequence_batch
from .adam import Adam, AdamConfig
from .layers import backward, forward
from .model import LstmModel

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    class_weights: tuple[float, float] | str | None = None  # None, (w0, w1), or "balanced"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch size must be at least 1")


def loss(probabilities: np.ndarray, label: int, class_weights: tuple[float, float] | None = None) -> float:
    """Weighted categorical cross-entropy of one prediction."""
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 1 or label not in range(p.shape[0]):
        raise ValidationError(f"label {label} invalid for {p.shape[0]} class probabilities")
    w = 1.0 if class_weights is None else float(class_weights[label])
    return float(-w * np.log(np.clip(p[label], PROB_FLOOR, 1.0)))


def resolve_class_weights(
    spec: tuple[float, float] | str | None, y: np.ndarray
) -> np.ndarray:
    if spec is None:
        return np.ones(2)
    if spec == "balanced":
        counts = np.bincount(y, minlength=2).astype(np.float64)
        counts[counts == 0] = 1.0
        return len(y) / (2.0 * counts)
    w = np.asarray(spec, dtype=np.float64)
    if w.shape != (2,) or (w < 0).any():
        raise ValidationError(f"class weights must be two nonnegative values, got {spec}")
    return w


def _batch_loss(probs: np.ndarray, y: np.ndarray, weights: np.ndarray) -> float:
    picked = np.clip(probs[np.arange(len(y)), y], PROB_FLOOR, 1.0)
    return float(np.sum(weights * -np.log(picked)))


def train(
    model: LstmModel,
    sequences: np.ndarray,
    labels: np.ndarray,
    adam_config: AdamConfig | None = None,
    train_config: TrainConfig | None = None,
) -> tuple[LstmModel, list[float]]:
    """Mini-batch Adam training; deterministic for a fixed shuffle seed.

    Updates `model` in place and returns it with the per-epoch mean loss
    history. A single-class dataset trains degenerately but legally.
    """
    cfg = train_config or TrainConfig()
    X = check_sequence_batch(sequences, n_features=model.input_dim)
    y = check_labels(labels, X.shape[0])
    if len(np.unique(y)) < 2:
        warnings.warn("training set contains a single class; proceeding degenerately", stacklevel=2)

    weights = resolve_class_weights(cfg.class_weights, y)
    sample_w = weights[y]
    rng = np.random.default_rng(cfg.seed)
    optimizer = Adam(adam_config)
    params = model.params()

    history = []
    n = X.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            probs, cache = forward(model, X[idx])
            epoch_loss += _batch_loss(probs, y[idx], sample_w[idx])
            grads = backward(model, cache, y[idx], sample_w[idx])
            scale = 1.0 / len(idx)
            grads = {k: g * scale for k, g in grads.items()}
            optimizer.step(params, grads)
        history.append(epoch_loss / n)
    return model, history


def predict(model: LstmModel, sequence: np.ndarray) -> float:
    """Positive-class confidence for one sequence."""
    probs, _ = forward(model, np.asarray(sequence)[np.newaxis])
    return float(probs[0, 1])


def predict_batch(model: LstmModel, sequences: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Positive-class confidences for many sequences."""
    X = check_sequence_batch(sequences, n_features=model.input_dim)
    out = np.empty(X.shape[0])
    for lo in range(0, X.shape[0], chunk):
        probs, _ = forward(model, X[lo:lo + chunk])
        out[lo:lo + chunk] = probs[:, 1]
    return out
