"""Soft-binned HOOF histograms and per-window feature sequences.

A histogram has B bin centers at angles 2*pi*b/B. Each flow vector splits its
magnitude between the two circularly adjacent centers by linear interpolation,
so a vector exactly on a center contributes to that bin alone. Histograms are
L1-normalized unless the total pooled magnitude is zero, in which case the
histogram stays all-zero ("no motion" is distinct from "isotropic motion").
"""
from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio.types import FrameSequence, LandmarkSet
from .errors import ConsistencyError, DegenerateRoiError, ValidationError
from .optflow import FlowField, FlowParams, compute_flow_batch, flow_pairs_for_window
from .preprocess import (
    Box,
    RoiParams,
    RoiSet,
    WindowInterval,
    WindowParams,
    apply_alignment,
    compute_alignment,
    extract_rois,
    eye_centers,
    generate_windows,
)
from .util import canonical_json, sha256_hex

CACHE_MAGIC = b"MSFC"
CACHE_VERSION = 1
FEATURE_DIM = 24  # 3 ROIs x 8 bins


@dataclass(frozen=True)
class HoofParams:
    bins: int = 8
    min_magnitude: float = 0.0

    def __post_init__(self):
        if self.bins < 2:
            raise ValidationError("hoof needs at least 2 bins")
        if self.min_magnitude < 0:
            raise ValidationError("min_magnitude must be nonnegative")


@dataclass
class HoofSequence:
    """Per-window feature tensor of N timesteps x (3 ROIs x 8 bins) values."""

    window: WindowInterval
    features: np.ndarray  # (N, FEATURE_DIM) float32
    label: bool | None = None


def hoof(
    u: np.ndarray,
    v: np.ndarray,
    bins: int = 8,
    min_magnitude: float = 0.0,
    normalize: bool = True,
) -> np.ndarray:
    """Orientation histogram of flow vectors, magnitude-weighted and soft-binned.

    With `normalize=False` the raw bin masses are returned; they sum to the
    total pooled magnitude.
    """
    if bins < 2:
        raise ValidationError("hoof needs at least 2 bins")
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValidationError("u and v components must have equal length")
    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise ValidationError("flow vectors contain non-finite values")

    mag = np.hypot(u, v)
    if min_magnitude > 0:
        keep = mag >= min_magnitude
        u, v, mag = u[keep], v[keep], mag[keep]

    hist = np.zeros(bins, dtype=np.float64)
    if mag.size:
        width = 2.0 * np.pi / bins
        pos = np.mod(np.arctan2(v, u), 2.0 * np.pi) / width
        lower = np.floor(pos).astype(np.int64)
        frac = pos - lower
        lower %= bins
        upper = (lower + 1) % bins
        np.add.at(hist, lower, (1.0 - frac) * mag)
        np.add.at(hist, upper, frac * mag)
    if normalize:
        total = hist.sum()
        if total > 0:
            hist /= total
    return hist


def pool_roi(flow: FlowField, roi: Box | tuple[Box, ...]) -> np.ndarray:
    """All valid-interior flow vectors whose pixel lies in the region.

    The region is one box or a union of boxes (the mouth-corner pair pools
    as one region). The 1-px frame border carries no valid derivatives and
    is excluded.
    """
    boxes = (roi,) if isinstance(roi, Box) else tuple(roi)
    h, w = flow.shape
    mask = np.zeros((h, w), dtype=bool)
    for box in boxes:
        clamped = box.clamp(w, h)
        mask[clamped.y0:clamped.y1, clamped.x0:clamped.x1] = True
    # strip the frame border, not the roi's own border
    mask[0, :] = mask[-1, :] = False
    mask[:, 0] = mask[:, -1] = False
    if not mask.any():
        raise DegenerateRoiError("roi contains no valid interior pixels")
    return np.stack([flow.u[mask], flow.v[mask]], axis=1)


def build_sequence(
    aligned_frames: np.ndarray,
    rois: RoiSet,
    window: WindowInterval,
    fps: float,
    flow_params: FlowParams | None = None,
    hoof_params: HoofParams | None = None,
) -> HoofSequence:
    """Flow, ROI pooling, and HOOF histograms for every timestep of one window."""
    flow_params = flow_params or FlowParams()
    hoof_params = hoof_params or HoofParams()
    if aligned_frames.shape[0] != window.length:
        raise ValidationError(
            f"window expects {window.length} aligned frames, got {aligned_frames.shape[0]}"
        )
    pairs = flow_pairs_for_window(window, fps, flow_params)
    idx_a = [a - window.start for a, _ in pairs]
    idx_b = [b - window.start for _, b in pairs]
    flows = compute_flow_batch(aligned_frames[idx_a], aligned_frames[idx_b], flow_params)

    rows = []
    for flow in flows:
        blocks = [
            hoof(*pool_roi(flow, boxes).T, bins=hoof_params.bins, min_magnitude=hoof_params.min_magnitude)
            for _, boxes in rois.regions()
        ]
        rows.append(np.concatenate(blocks))
    return HoofSequence(window=window, features=np.stack(rows).astype(np.float32))


def extract_video_features(
    sequence: FrameSequence,
    landmarks: LandmarkSet,
    window_params: WindowParams | None = None,
    roi_params: RoiParams | None = None,
    flow_params: FlowParams | None = None,
    hoof_params: HoofParams | None = None,
) -> list[HoofSequence]:
    """Window, align, and featurize one whole video."""
    window_params = window_params or WindowParams()
    windows = generate_windows(sequence.frame_count, sequence.fps, window_params, sequence.video_id)
    out = []
    for win in windows:
        lm = landmarks.for_frame(win.start)
        left, right = eye_centers(lm)
        transform = compute_alignment(left, right, source_index=win.start)
        aligned = apply_alignment(sequence.frames[win.start:win.end], transform)
        rois = extract_rois(lm, transform, (sequence.height, sequence.width), roi_params)
        out.append(build_sequence(aligned, rois, win, sequence.fps, flow_params, hoof_params))
    return out


def params_fingerprint(
    window_params: WindowParams,
    roi_params: RoiParams,
    flow_params: FlowParams,
    hoof_params: HoofParams,
) -> str:
    """Hash of every parameter that shapes feature values; stored in caches."""
    return sha256_hex(
        {
            "window": dataclasses.asdict(window_params),
            "roi": dataclasses.asdict(roi_params),
            "flow": dataclasses.asdict(flow_params),
            "hoof": dataclasses.asdict(hoof_params),
        }
    )


@dataclass
class FeatureCache:
    """One video's feature sequences plus the metadata needed to reuse them."""

    video_id: str
    subject_id: str
    fps: float
    frame_count: int
    params_hash: str
    windows: list[WindowInterval]
    features: np.ndarray  # (n_windows, N, FEATURE_DIM) float32

    @classmethod
    def from_sequences(
        cls,
        sequence: FrameSequence,
        hoof_sequences: list[HoofSequence],
        params_hash: str,
    ) -> "FeatureCache":
        return cls(
            video_id=sequence.video_id,
            subject_id=sequence.subject_id,
            fps=sequence.fps,
            frame_count=sequence.frame_count,
            params_hash=params_hash,
            windows=[s.window for s in hoof_sequences],
            features=np.stack([s.features for s in hoof_sequences]),
        )

    def sequences(self) -> list[HoofSequence]:
        return [
            HoofSequence(window=w, features=self.features[i])
            for i, w in enumerate(self.windows)
        ]


def write_feature_cache(cache: FeatureCache, path: str | Path) -> None:
    """Binary cache: magic, version, JSON header, then row-major f32 blocks."""
    n_windows, n_timesteps, dim = cache.features.shape
    header = canonical_json(
        {
            "video_id": cache.video_id,
            "subject_id": cache.subject_id,
            "fps": cache.fps,
            "frame_count": cache.frame_count,
            "params_hash": cache.params_hash,
            "n_windows": n_windows,
            "n_timesteps": n_timesteps,
            "feature_dim": dim,
            "windows": [[w.index, w.start, w.end] for w in cache.windows],
        }
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<II", CACHE_VERSION, len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(cache.features, dtype="<f4").tobytes())


def read_feature_cache(path: str | Path) -> FeatureCache:
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(4) != CACHE_MAGIC:
            raise ConsistencyError(f"{path}: not a feature cache")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != CACHE_VERSION:
            raise ConsistencyError(f"{path}: unsupported cache version {version}")
        meta = json.loads(fh.read(header_len).decode("utf-8"))
        shape = (meta["n_windows"], meta["n_timesteps"], meta["feature_dim"])
        expected = int(np.prod(shape)) * 4
        blob = fh.read(expected)
        if len(blob) != expected:
            raise ConsistencyError(f"{path}: truncated feature data")
        features = np.frombuffer(blob, dtype="<f4").reshape(shape).copy()
    windows = [
        WindowInterval(video_id=meta["video_id"], index=i, start=s, end=e)
        for i, s, e in meta["windows"]
    ]
    return FeatureCache(
        video_id=meta["video_id"],
        subject_id=meta["subject_id"],
        fps=meta["fps"],
        frame_count=meta["frame_count"],
        params_hash=meta["params_hash"],
        windows=windows,
        features=features,
    )


def check_cache_consistency(cache: FeatureCache, window_params: WindowParams | None = None) -> None:
    """Verify a cache covers exactly the windows its video would generate."""
    expected = generate_windows(
        cache.frame_count, cache.fps, window_params or WindowParams(), cache.video_id
    )
    got = [(w.start, w.end) for w in cache.windows]
    want = [(w.start, w.end) for w in expected]
    if got != want:
        raise ConsistencyError(
            f"feature cache for {cache.video_id} covers windows {got[:3]}..., expected {want[:3]}..."
        )
