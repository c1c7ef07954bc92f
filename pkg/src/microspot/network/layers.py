"""Forward pass and backprop-through-time for the stacked LSTM classifier.

Stateless functions over an `LstmModel`; the forward cache retains the
per-timestep gate activations needed by the analytic backward pass. Gradients
are exact (verified against central finite differences by the test suite).
"""
from __future__ import annotations

import numpy as np

from ..errors import ContractViolationError, ValidationError
from .model import LstmModel


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _param_checksums(model: LstmModel) -> tuple[float, ...]:
    return tuple(float(a.sum()) for a in model.params().values())


def forward(model: LstmModel, sequences: np.ndarray) -> tuple[np.ndarray, dict]:
    """Class probabilities for a batch of sequences shaped (n, T, input_dim).

    States start at zero; the dense softmax head reads the second layer's
    final hidden state. The returned cache feeds `backward`.
    """
    X = np.asarray(sequences, dtype=np.float64)
    if X.ndim == 2:
        X = X[np.newaxis]
    if X.ndim != 3 or X.shape[2] != model.input_dim:
        raise ValidationError(
            f"expected sequences shaped (n, T, {model.input_dim}), got {X.shape}"
        )
    n, T, _ = X.shape
    h_size = model.hidden_size

    cache: dict = {"X": X, "layers": [], "checksums": _param_checksums(model), "model_id": id(model)}
    inp = X
    h = np.zeros((n, h_size))
    for li in range(2):
        wx = getattr(model, f"l{li}_wx")
        wh = getattr(model, f"l{li}_wh")
        b = getattr(model, f"l{li}_b")
        h = np.zeros((n, h_size))
        c = np.zeros((n, h_size))
        steps = []
        outputs = np.empty((n, T, h_size))
        for t in range(T):
            z = inp[:, t, :] @ wx + h @ wh + b
            i = sigmoid(z[:, :h_size])
            f = sigmoid(z[:, h_size:2 * h_size])
            g = np.tanh(z[:, 2 * h_size:3 * h_size])
            o = sigmoid(z[:, 3 * h_size:])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            steps.append((inp[:, t, :], h, c, i, f, g, o, tc))
            h = o * tc
            c = c_new
            outputs[:, t, :] = h
        cache["layers"].append((steps, outputs))
        inp = outputs

    logits = h @ model.dense_w + model.dense_b
    probs = softmax(logits)
    cache["h_final"] = h
    cache["probs"] = probs
    return probs, cache


def backward(
    model: LstmModel,
    cache: dict,
    labels: np.ndarray,
    sample_weights: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    """Gradients of the summed weighted cross-entropy over the cached batch.

    Summed (not averaged) so a duplicated sample contributes twice; the
    training loop divides by the batch size for mean reduction.
    """
    if cache.get("model_id") != id(model) or cache.get("checksums") != _param_checksums(model):
        raise ContractViolationError("backward called with a cache from a different or mutated model")
    probs = cache["probs"]
    X = cache["X"]
    n, T, _ = X.shape
    h_size = model.hidden_size
    y = np.asarray(labels)
    if y.shape != (n,):
        raise ValidationError(f"labels must have shape ({n},), got {y.shape}")
    w = np.ones(n) if sample_weights is None else np.asarray(sample_weights, dtype=np.float64)

    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits *= w[:, None]

    grads = {name: np.zeros_like(arr) for name, arr in model.params().items()}
    grads["dense_w"] = cache["h_final"].T @ dlogits
    grads["dense_b"] = dlogits.sum(axis=0)

    # upstream dL/dh at each timestep; the head touches only the final step
    dh_above = np.zeros((n, T, h_size))
    dh_above[:, T - 1, :] = dlogits @ model.dense_w.T

    for li in (1, 0):
        steps, _ = cache["layers"][li]
        wx = getattr(model, f"l{li}_wx")
        wh = getattr(model, f"l{li}_wh")
        dh_next = np.zeros((n, h_size))
        dc_next = np.zeros((n, h_size))
        dx_all = np.empty((n, T, wx.shape[0])) if li == 1 else None
        for t in range(T - 1, -1, -1):
            x_t, h_prev, c_prev, i, f, g, o, tc = steps[t]
            dh = dh_above[:, t, :] + dh_next
            do = dh * tc
            dc = dc_next + dh * o * (1.0 - tc * tc)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc_next = dc * f
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            grads[f"l{li}_wx"] += x_t.T @ dz
            grads[f"l{li}_wh"] += h_prev.T @ dz
            grads[f"l{li}_b"] += dz.sum(axis=0)
            dh_next = dz @ wh.T
            if dx_all is not None:
                dx_all[:, t, :] = dz @ wx.T
        if dx_all is not None:
            dh_above = dx_all
    return grads
