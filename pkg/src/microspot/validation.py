"""Input validation helpers used by the estimators and the pipeline functions."""
from __future__ import annotations

import numpy as np

from .errors import ValidationError


def check_finite(arr: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(arr)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def check_frames(frames: np.ndarray, name: str = "frames") -> np.ndarray:
    """Validate a (T, H, W) stack of grayscale frames with intensities in [0, 1]."""
    frames = np.asarray(frames)
    if frames.ndim != 3:
        raise ValidationError(f"{name} must be a (T, H, W) array, got shape {frames.shape}")
    if frames.shape[0] < 1:
        raise ValidationError(f"{name} must contain at least one frame")
    check_finite(frames, name)
    if float(frames.min()) < 0.0 or float(frames.max()) > 1.0:
        raise ValidationError(f"{name} intensities must lie in [0, 1]")
    return frames


def check_landmark_points(points: np.ndarray, name: str = "landmarks") -> np.ndarray:
    """Validate a (68, 2) landmark array."""
    points = np.asarray(points, dtype=np.float64)
    if points.shape != (68, 2):
        raise ValidationError(f"{name} must have shape (68, 2), got {points.shape}")
    check_finite(points, name)
    return points


def check_sequence_batch(X, n_timesteps: int | None = None, n_features: int | None = None) -> np.ndarray:
    """Validate a batch of feature sequences shaped (n_samples, n_timesteps, n_features)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[np.newaxis]
    if X.ndim != 3:
        raise ValidationError(f"expected (n_samples, n_timesteps, n_features) sequences, got shape {X.shape}")
    if n_timesteps is not None and X.shape[1] != n_timesteps:
        raise ValidationError(f"expected {n_timesteps} timesteps, got {X.shape[1]}")
    if n_features is not None and X.shape[2] != n_features:
        raise ValidationError(f"expected {n_features} features per timestep, got {X.shape[2]}")
    check_finite(X, "sequence batch")
    return X


def check_labels(y, n_samples: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n_samples,):
        raise ValidationError(f"labels must have shape ({n_samples},), got {y.shape}")
    y = y.astype(np.int64)
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be binary (0 or 1)")
    return y


def check_interval(start: int, end: int, name: str = "interval") -> tuple[int, int]:
    """Validate a non-empty half-open frame interval."""
    start, end = int(start), int(end)
    if end <= start:
        raise ValidationError(f"{name} [{start}, {end}) is empty")
    return start, end


def check_probability(p: float, name: str = "probability") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or not np.isfinite(p):
        raise ValidationError(f"{name} must lie in [0, 1], got {p}")
    return p
