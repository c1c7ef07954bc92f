"""Adam optimizer over named parameter arrays."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-3
    decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        # zero is legal (freezes parameters); negative is not
        if self.learning_rate < 0:
            raise ValidationError("learning rate must be nonnegative")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValidationError("betas must lie in [0, 1)")
        if self.decay < 0 or self.epsilon <= 0:
            raise ValidationError("decay must be nonnegative and epsilon positive")


class Adam:
    """Standard Adam with bias correction and optional per-step lr decay."""

    def __init__(self, config: AdamConfig | None = None):
        self.config = config or AdamConfig()
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update `params` in place from `grads` (matching keys and shapes)."""
        cfg = self.config
        lr = cfg.learning_rate / (1.0 + cfg.decay * self.t)
        self.t += 1
        bc1 = 1.0 - cfg.beta1 ** self.t
        bc2 = 1.0 - cfg.beta2 ** self.t
        for key, p in params.items():
            g = grads[key]
            if key not in self.m:
                self.m[key] = np.zeros_like(p)
                self.v[key] = np.zeros_like(p)
            self.m[key] = cfg.beta1 * self.m[key] + (1.0 - cfg.beta1) * g
            self.v[key] = cfg.beta2 * self.v[key] + (1.0 - cfg.beta2) * (g * g)
            m_hat = self.m[key] / bc1
            v_hat = self.v[key] / bc2
            p -= lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
