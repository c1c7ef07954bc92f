"""Deterministic synthetic face videos with planted micro-movements.

Each video is a static textured face-like background plus per-frame Gaussian
pixel noise. A planted movement is a localized smooth warp: a Gaussian
displacement bump centered on one ROI anchor (brow or mouth corner), whose
amplitude follows an onset-apex-offset tent envelope. Ground truth records
the exact planted interval. Frames are quantized to 8-bit so writing and
reloading the dataset is lossless.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import ValidationError
from ..util import iround
from .types import Dataset, FrameSequence, GroundTruthEntry, LandmarkSet, SyntheticSpec

TEXTURE_SMOOTH_SIGMA = 3.0
EDGE_PAD = 8  # frames kept still at each end of a movement's segment


def canonical_landmarks(width: int, height: int) -> np.ndarray:
    """Fixed synthetic 68-point layout, scaled to the frame size.

    Follows the standard ordering: jaw 0-16, brows 17-26, nose 27-35,
    eyes 36-47, mouth 48-67. Eye centers are horizontal by construction.
    """
    pts = np.zeros((68, 2))
    # jaw: arc from left temple around the chin to the right temple
    t = np.linspace(0.0, np.pi, 17)
    pts[0:17, 0] = 0.5 - 0.34 * np.cos(t)
    pts[0:17, 1] = 0.42 + 0.50 * np.sin(t)
    # brows: gentle upward arches
    arch = 0.02 * np.sin(np.linspace(0.0, np.pi, 5))
    pts[17:22, 0] = np.linspace(0.26, 0.42, 5)
    pts[17:22, 1] = 0.30 - arch
    pts[22:27, 0] = np.linspace(0.58, 0.74, 5)
    pts[22:27, 1] = 0.30 - arch
    # nose bridge and base
    pts[27:31, 0] = 0.5
    pts[27:31, 1] = np.linspace(0.40, 0.52, 4)
    pts[31:36, 0] = np.linspace(0.44, 0.56, 5)
    pts[31:36, 1] = 0.56
    # eyes: hexagonal rings, centers at (0.34, 0.38) and (0.66, 0.38)
    ring = np.linspace(0.0, 2.0 * np.pi, 6, endpoint=False)
    for start, cx in ((36, 0.34), (42, 0.66)):
        pts[start:start + 6, 0] = cx + 0.05 * np.cos(ring)
        pts[start:start + 6, 1] = 0.38 + 0.02 * np.sin(ring)
    # mouth: outer ring of 12, inner ring of 8; corners at 48 and 54
    outer = np.linspace(np.pi, 3.0 * np.pi, 12, endpoint=False)
    pts[48:60, 0] = 0.5 + 0.13 * np.cos(outer)
    pts[48:60, 1] = 0.72 + 0.045 * np.sin(outer)
    inner = np.linspace(np.pi, 3.0 * np.pi, 8, endpoint=False)
    pts[60:68, 0] = 0.5 + 0.08 * np.cos(inner)
    pts[60:68, 1] = 0.72 + 0.02 * np.sin(inner)

    return pts * np.array([width, height], dtype=np.float64)


# anchors used round-robin for planted movements: landmark index of the bump center
MOVEMENT_ANCHORS = (19, 24, 48, 54)  # left brow, right brow, left and right mouth corner


@dataclass(frozen=True)
class PlantedMovement:
    """Construction-time record of one planted warp (superset of ground truth)."""

    center: tuple[float, float]
    direction: tuple[float, float]
    onset0: int  # 0-based index of the first moving frame
    apex0: int
    duration: int

    @property
    def end0(self) -> int:
        return self.onset0 + self.duration

    def envelope(self, frame: int) -> float:
        """Tent envelope: 0 outside the interval, 1 at the apex."""
        if not (self.onset0 <= frame < self.end0):
            return 0.0
        p = frame - self.onset0
        a = self.apex0 - self.onset0
        if p <= a:
            return (p + 1.0) / (a + 1.0)
        return (self.duration - p) / float(self.duration - a)


def displace_patch(
    base: np.ndarray,
    center: tuple[float, float],
    direction: tuple[float, float],
    scale: float,
    sigma: float,
) -> tuple[slice, slice, np.ndarray]:
    """Warp a local patch of `base` by a Gaussian displacement bump.

    The pattern moves by `scale * direction` pixels at the bump center,
    tapering off with spatial std `sigma`. Returns the patch slices and the
    warped patch values (bilinear resampling of `base`).
    """
    h, w = base.shape
    cx, cy = center
    reach = int(np.ceil(3.0 * sigma + abs(scale) + 2.0))
    x0, x1 = max(0, int(cx) - reach), min(w, int(cx) + reach + 1)
    y0, y1 = max(0, int(cy) - reach), min(h, int(cy) + reach + 1)
    ys, xs = np.mgrid[y0:y1, x0:x1].astype(np.float64)
    r2 = (xs - cx) ** 2 + (ys - cy) ** 2
    bump = scale * np.exp(-r2 / (2.0 * sigma * sigma))
    sx = xs - bump * direction[0]
    sy = ys - bump * direction[1]

    ix = np.clip(np.floor(sx).astype(np.int64), 0, w - 2)
    iy = np.clip(np.floor(sy).astype(np.int64), 0, h - 2)
    fx = np.clip(sx - ix, 0.0, 1.0)
    fy = np.clip(sy - iy, 0.0, 1.0)
    patch = (
        base[iy, ix] * (1 - fx) * (1 - fy)
        + base[iy, ix + 1] * fx * (1 - fy)
        + base[iy + 1, ix] * (1 - fx) * fy
        + base[iy + 1, ix + 1] * fx * fy
    )
    return slice(y0, y1), slice(x0, x1), patch


def _face_background(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    tex = gaussian_filter(rng.standard_normal((height, width)), TEXTURE_SMOOTH_SIGMA)
    tex -= tex.min()
    ptp = np.ptp(tex)
    if ptp > 0:
        tex /= ptp
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    face = (((xs / width - 0.5) / 0.42) ** 2 + ((ys / height - 0.52) / 0.50) ** 2) <= 1.0
    return 0.15 + 0.60 * tex + 0.10 * face


def _plan_movements(
    rng: np.random.Generator,
    spec: SyntheticSpec,
    landmarks: np.ndarray,
    anchor_offset: int = 0,
) -> list[PlantedMovement]:
    if spec.n_movements == 0:
        return []
    segment = spec.frames_per_video // spec.n_movements
    lo, hi = spec.duration_range
    if segment < hi + 2 * EDGE_PAD:
        raise ValidationError(
            f"{spec.n_movements} movements of up to {hi} frames do not fit in "
            f"{spec.frames_per_video} frames"
        )
    movements = []
    for k in range(spec.n_movements):
        duration = int(rng.integers(lo, hi + 1))
        onset0 = int(rng.integers(k * segment + EDGE_PAD, (k + 1) * segment - duration - EDGE_PAD + 1))
        if duration >= 3:
            apex_off = int(np.clip(iround(0.4 * (duration - 1)), 1, duration - 2))
        else:
            apex_off = 0
        angle = rng.uniform(0.0, 2.0 * np.pi)
        anchor = landmarks[MOVEMENT_ANCHORS[(anchor_offset + k) % len(MOVEMENT_ANCHORS)]]
        movements.append(
            PlantedMovement(
                center=(float(anchor[0]), float(anchor[1])),
                direction=(float(np.cos(angle)), float(np.sin(angle))),
                onset0=onset0,
                apex0=onset0 + apex_off,
                duration=duration,
            )
        )
    return movements


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Generate a dataset per `spec`. Identical spec and seed give bit-identical output."""
    rng = np.random.default_rng(spec.seed)
    layout = canonical_landmarks(spec.width, spec.height)
    bump_sigma = 0.15 * float(
        np.linalg.norm(layout[42:48].mean(axis=0) - layout[36:42].mean(axis=0))
    )
    n_subjects = spec.n_subjects or spec.n_videos

    sequences, landmark_sets, ground_truth = [], [], []
    for vi in range(spec.n_videos):
        video_id = f"v{vi:03d}"
        subject_id = f"s{vi % n_subjects:02d}"
        base = _face_background(rng, spec.width, spec.height)
        movements = _plan_movements(rng, spec, layout, anchor_offset=vi)

        noise = rng.standard_normal((spec.frames_per_video, spec.height, spec.width))
        stack = base[np.newaxis] + spec.noise_std * noise
        for mv in movements:
            if spec.amplitude_px > 0:
                for t in range(mv.onset0, mv.end0):
                    rows, cols, patch = displace_patch(
                        base, mv.center, mv.direction, spec.amplitude_px * mv.envelope(t), bump_sigma
                    )
                    stack[t, rows, cols] = patch + spec.noise_std * noise[t, rows, cols]
            ground_truth.append(
                GroundTruthEntry(
                    video_id=video_id,
                    subject_id=subject_id,
                    onset=mv.onset0 + 1,
                    apex=mv.apex0 + 1,
                    offset=mv.end0,
                    au_codes="synthetic",
                )
            )

        quantized = np.round(np.clip(stack, 0.0, 1.0) * 255.0).astype(np.uint8)
        sequences.append(
            FrameSequence(
                video_id=video_id,
                subject_id=subject_id,
                fps=spec.fps,
                frames=quantized.astype(np.float32) / 255.0,
            )
        )
        landmark_sets.append(
            LandmarkSet(
                video_id=video_id,
                frame_indices=np.array([0]),
                points=layout[np.newaxis].copy(),
            )
        )

    return Dataset(sequences=sequences, landmarks=landmark_sets, ground_truth=ground_truth)
