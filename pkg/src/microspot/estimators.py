"""Scikit-learn style transformer over raw videos.

`HoofExtractor.transform` maps (FrameSequence, LandmarkSet) pairs to lists of
per-window `HoofSequence` objects, so the whole preprocessing and feature
stage composes like any stateless transformer.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .features import HoofParams, extract_video_features, params_fingerprint
from .optflow import FlowParams
from .preprocess import RoiParams, WindowParams


class HoofExtractor(BaseEstimator, TransformerMixin):
    """Windows, aligns, and featurizes videos into HOOF sequences."""

    def __init__(
        self,
        window_seconds: float = 0.5,
        overlap_seconds: float = 0.3,
        brow_margin_scale: float = 0.15,
        mouth_box_scale: float = 0.5,
        rate_seconds: float = 1.0 / 50.0,
        flow_alpha: float = 1.0,
        flow_iterations: int = 200,
        flow_tolerance: float = 1e-4,
        flow_sigma: float = 1.0,
        bins: int = 8,
        min_magnitude: float = 0.0,
    ):
        self.window_seconds = window_seconds
        self.overlap_seconds = overlap_seconds
        self.brow_margin_scale = brow_margin_scale
        self.mouth_box_scale = mouth_box_scale
        self.rate_seconds = rate_seconds
        self.flow_alpha = flow_alpha
        self.flow_iterations = flow_iterations
        self.flow_tolerance = flow_tolerance
        self.flow_sigma = flow_sigma
        self.bins = bins
        self.min_magnitude = min_magnitude

    def _params(self) -> tuple[WindowParams, RoiParams, FlowParams, HoofParams]:
        return (
            WindowParams(self.window_seconds, self.overlap_seconds),
            RoiParams(self.brow_margin_scale, self.mouth_box_scale),
            FlowParams(
                rate_seconds=self.rate_seconds,
                alpha=self.flow_alpha,
                iterations=self.flow_iterations,
                tolerance=self.flow_tolerance,
                sigma=self.flow_sigma,
            ),
            HoofParams(bins=self.bins, min_magnitude=self.min_magnitude),
        )

    def fingerprint(self) -> str:
        return params_fingerprint(*self._params())

    def fit(self, X, y=None) -> "HoofExtractor":
        # stateless; nothing to learn
        return self

    def transform(self, X):
        """X: iterable of (FrameSequence, LandmarkSet) pairs."""
        window, roi, flow, hoof_params = self._params()
        return [
            extract_video_features(seq, landmarks, window, roi, flow, hoof_params)
            for seq, landmarks in X
        ]
