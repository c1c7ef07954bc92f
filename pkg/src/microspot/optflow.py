"""Dense optical flow between frame pairs separated by the downsample gap.

The estimator is classic Horn-Schunck: brightness constancy plus a global
smoothness regularizer, solved by Jacobi iterations of the standard update

    u <- u_avg - Ix * (Ix*u_avg + Iy*v_avg + It) / (alpha^2 + Ix^2 + Iy^2)

and symmetrically for v. Intensities are scaled to the classic 0..255
convention internally so the conventional alpha default keeps its usual
meaning on [0, 1] frames. The estimator sits behind `compute_flow` so an
alternative can be swapped in without touching callers.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ValidationError
from .preprocess import WindowInterval
from .util import iround

INTENSITY_SCALE = 255.0

FLOW_MAGIC = b"MSFF"
FLOW_VERSION = 1


@dataclass(frozen=True)
class FlowParams:
    """Downsample rate and Horn-Schunck solver settings."""

    rate_seconds: float = 1.0 / 50.0
    alpha: float = 1.0
    iterations: int = 200
    tolerance: float = 1e-4
    sigma: float = 1.0

    def __post_init__(self):
        if self.rate_seconds <= 0 or self.alpha <= 0 or self.iterations < 1 or self.tolerance <= 0:
            raise ValidationError("flow params must satisfy rate > 0, alpha > 0, iterations >= 1, tolerance > 0")

    def gap(self, fps: float) -> int:
        """Frame gap R between the two frames of each flow computation."""
        return max(1, iround(fps * self.rate_seconds))


@dataclass(frozen=True)
class FlowField:
    """Per-pixel displacement in pixels over the R-frame gap."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.ndim != 2:
            raise ValidationError("flow planes must be two matching 2-D arrays")

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape


def _local_mean(f: np.ndarray) -> np.ndarray:
    """3x3 weighted neighborhood average (the classic Horn-Schunck kernel)."""
    pad = [(0, 0)] * (f.ndim - 2) + [(1, 1), (1, 1)]
    p = np.pad(f, pad, mode="symmetric")
    n = p[..., :-2, 1:-1]
    s = p[..., 2:, 1:-1]
    w = p[..., 1:-1, :-2]
    e = p[..., 1:-1, 2:]
    nw = p[..., :-2, :-2]
    ne = p[..., :-2, 2:]
    sw = p[..., 2:, :-2]
    se = p[..., 2:, 2:]
    return (n + s + w + e) / 6.0 + (nw + ne + sw + se) / 12.0


def _derivatives(a: np.ndarray, b: np.ndarray, sigma: float):
    """Spatial central differences of the frame average, forward temporal
    difference; the 1-px border is excluded from derivative validity."""
    if sigma > 0:
        smooth_sigma = (0.0,) * (a.ndim - 2) + (sigma, sigma)
        a = gaussian_filter(a, smooth_sigma)
        b = gaussian_filter(b, smooth_sigma)
    mid = 0.5 * (a + b)
    ix = np.zeros_like(mid)
    iy = np.zeros_like(mid)
    ix[..., :, 1:-1] = 0.5 * (mid[..., :, 2:] - mid[..., :, :-2])
    iy[..., 1:-1, :] = 0.5 * (mid[..., 2:, :] - mid[..., :-2, :])
    it = b - a
    for d in (ix, iy, it):
        d[..., 0, :] = 0.0
        d[..., -1, :] = 0.0
        d[..., :, 0] = 0.0
        d[..., :, -1] = 0.0
    return ix, iy, it


def compute_flow_batch(frames_a: np.ndarray, frames_b: np.ndarray, params: FlowParams | None = None) -> list[FlowField]:
    """Horn-Schunck flow for a batch of frame pairs, stacked along axis 0.

    Each pair iterates independently; converged pairs are frozen, so the
    result is identical to running `compute_flow` on every pair separately.
    """
    params = params or FlowParams()
    frames_a = np.asarray(frames_a, dtype=np.float64)
    frames_b = np.asarray(frames_b, dtype=np.float64)
    if frames_a.shape != frames_b.shape or frames_a.ndim != 3:
        raise ValidationError(f"frame batches must share a (B, H, W) shape, got {frames_a.shape} vs {frames_b.shape}")
    if not (np.isfinite(frames_a).all() and np.isfinite(frames_b).all()):
        raise ValidationError("frames contain non-finite values")

    batch = frames_a.shape[0]
    ix, iy, it = _derivatives(frames_a * INTENSITY_SCALE, frames_b * INTENSITY_SCALE, params.sigma)
    denom = params.alpha ** 2 + ix ** 2 + iy ** 2

    u = np.zeros_like(ix)
    v = np.zeros_like(ix)
    out_u = np.zeros_like(ix)
    out_v = np.zeros_like(ix)
    slots = np.arange(batch)

    for _ in range(params.iterations):
        if slots.size == 0:
            break
        u_avg = _local_mean(u)
        v_avg = _local_mean(v)
        d = (ix * u_avg + iy * v_avg + it) / denom
        u_new = u_avg - ix * d
        v_new = v_avg - iy * d
        delta = np.maximum(
            np.abs(u_new - u).max(axis=(1, 2)),
            np.abs(v_new - v).max(axis=(1, 2)),
        )
        u, v = u_new, v_new
        done = delta < params.tolerance
        if done.any():
            out_u[slots[done]] = u[done]
            out_v[slots[done]] = v[done]
            keep = ~done
            slots = slots[keep]
            u, v = u[keep], v[keep]
            ix, iy, it, denom = ix[keep], iy[keep], it[keep], denom[keep]
    out_u[slots] = u
    out_v[slots] = v
    return [FlowField(u=out_u[i], v=out_v[i]) for i in range(batch)]


def compute_flow(frame_a: np.ndarray, frame_b: np.ndarray, params: FlowParams | None = None) -> FlowField:
    """Dense flow from `frame_a` to `frame_b` (both grayscale in [0, 1])."""
    frame_a = np.asarray(frame_a, dtype=np.float64)
    frame_b = np.asarray(frame_b, dtype=np.float64)
    if frame_a.shape != frame_b.shape or frame_a.ndim != 2:
        raise ValidationError(f"frames must share one (H, W) shape, got {frame_a.shape} vs {frame_b.shape}")
    return compute_flow_batch(frame_a[np.newaxis], frame_b[np.newaxis], params)[0]


def flow_pairs_for_window(window: WindowInterval, fps: float, params: FlowParams | None = None) -> list[tuple[int, int]]:
    """Absolute (i, i+gap) frame-index pairs feeding the flow timesteps.

    Exactly N = round(|W| / R) pairs; the final pair is clipped to the last
    frame of the window so it never reaches outside.
    """
    params = params or FlowParams()
    r = params.gap(fps)
    w = window.length
    if w < r + 1:
        raise ValidationError(f"window length {w} must be at least gap + 1 = {r + 1}")
    n = iround(w / r)
    last = window.start + w - 1
    pairs = []
    for k in range(n):
        a = window.start + k * r
        b = min(window.start + (k + 1) * r, last)
        if a >= b:
            a = b - 1
        pairs.append((a, b))
    return pairs


def write_flow_field(path: str | Path, flow: FlowField) -> None:
    """Debug dump: 16-byte header (magic, version, width, height), then the
    u-plane and v-plane as little-endian f32."""
    h, w = flow.shape
    with open(path, "wb") as fh:
        fh.write(FLOW_MAGIC)
        fh.write(struct.pack("<III", FLOW_VERSION, w, h))
        fh.write(flow.u.astype("<f4").tobytes())
        fh.write(flow.v.astype("<f4").tobytes())


def read_flow_field(path: str | Path) -> FlowField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FLOW_MAGIC:
            raise ValidationError(f"{path}: not a flow dump (bad magic {magic!r})")
        version, w, h = struct.unpack("<III", fh.read(12))
        if version != FLOW_VERSION:
            raise ValidationError(f"{path}: unsupported flow dump version {version}")
        count = w * h
        u = np.frombuffer(fh.read(4 * count), dtype="<f4").reshape(h, w)
        v = np.frombuffer(fh.read(4 * count), dtype="<f4").reshape(h, w)
    return FlowField(u=u.astype(np.float64), v=v.astype(np.float64))
