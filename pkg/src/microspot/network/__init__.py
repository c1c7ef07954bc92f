from .adam import Adam, AdamConfig
from .classifier import LstmSequenceClassifier
from .layers import backward, forward, sigmoid, softmax
from .model import GATE_ORDER, LstmModel, load_model, save_model
from .training import TrainConfig, loss, predict, predict_batch, resolve_class_weights, train

__all__ = [
    "Adam",
    "AdamConfig",
    "GATE_ORDER",
    "LstmModel",
    "LstmSequenceClassifier",
    "TrainConfig",
    "backward",
    "forward",
    "load_model",
    "loss",
    "predict",
    "predict_batch",
    "resolve_class_weights",
    "save_model",
    "sigmoid",
    "softmax",
    "train",
]
