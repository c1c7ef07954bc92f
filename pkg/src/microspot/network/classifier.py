"""Scikit-learn style wrapper around the sequence classifier."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..errors import ValidationError
from ..validation import check_labels, check_sequence_batch
from .adam import AdamConfig
from .model import LstmModel
from .training import TrainConfig, predict_batch, train


class LstmSequenceClassifier(BaseEstimator, ClassifierMixin):
    """Binary sequence classifier: 2 LSTM layers and a dense softmax head.

    Accepts feature sequences shaped (n_samples, n_timesteps, n_features)
    and follows the fit/predict/predict_proba estimator conventions, so it
    composes with model selection utilities that tolerate 3-D inputs.
    """

    def __init__(
        self,
        hidden_size: int = 12,
        epochs: int = 50,
        learning_rate: float = 1e-3,
        decay: float = 0.0,
        batch_size: int = 32,
        seed: int = 0,
        class_weights: tuple[float, float] | str | None = None,
    ):
        self.hidden_size = hidden_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.decay = decay
        self.batch_size = batch_size
        self.seed = seed
        self.class_weights = class_weights

    def fit(self, X, y) -> "LstmSequenceClassifier":
        X = check_sequence_batch(X)
        y = check_labels(y, X.shape[0])
        rng = np.random.default_rng(self.seed)
        model = LstmModel.initialize(
            input_dim=X.shape[2], hidden_size=self.hidden_size, rng=rng
        )
        _, history = train(
            model,
            X,
            y,
            adam_config=AdamConfig(learning_rate=self.learning_rate, decay=self.decay),
            train_config=TrainConfig(
                epochs=self.epochs,
                batch_size=self.batch_size,
                seed=self.seed,
                class_weights=self.class_weights,
            ),
        )
        self.model_ = model
        self.loss_history_ = history
        self.classes_ = np.array([0, 1])
        self.n_timesteps_ = X.shape[1]
        self.n_features_in_ = X.shape[2]
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise ValidationError("classifier is not fitted; call fit first")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_sequence_batch(X, n_features=self.n_features_in_)
        positive = predict_batch(self.model_, X)
        return np.stack([1.0 - positive, positive], axis=1)

    def predict(self, X) -> np.ndarray:
        # inclusive 0.5 boundary, matching the spotting threshold convention
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)
