"""Face alignment, sliding-window generation, and ROI extraction.

All frame intervals are 0-based and half-open. Windows are aligned once per
window using the eye line of the window's first frame, and the same rotation
is reused for every frame inside the window.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, TooShortVideoError, ValidationError
from .util import iround
from .validation import check_finite, check_landmark_points

# 0-based index ranges of the standard 68-point annotation convention
LEFT_EYE = slice(36, 42)
RIGHT_EYE = slice(42, 48)
LEFT_BROW = slice(17, 22)
RIGHT_BROW = slice(22, 27)
MOUTH_CORNER_LEFT = 48
MOUTH_CORNER_RIGHT = 54


@dataclass(frozen=True)
class WindowParams:
    """Sliding-window timing; frame counts are derived per video from fps."""

    window_seconds: float = 0.5
    overlap_seconds: float = 0.3

    def window_len(self, fps: float) -> int:
        return iround(self.window_seconds * fps)

    def overlap_len(self, fps: float) -> int:
        return iround(self.overlap_seconds * fps)

    def stride(self, fps: float) -> int:
        return self.window_len(fps) - self.overlap_len(fps)

    def validate(self, fps: float) -> None:
        if fps <= 0:
            raise ValidationError(f"fps must be positive, got {fps}")
        w, o = self.window_len(fps), self.overlap_len(fps)
        if not (0 < o < w):
            raise ValidationError(f"overlap must satisfy 0 < overlap < window, got {o} vs {w}")
        if self.stride(fps) < 1:
            raise ValidationError("stride must be at least 1 frame")


@dataclass(frozen=True)
class WindowInterval:
    """One half-open frame interval produced by the sliding window."""

    video_id: str
    index: int
    start: int
    end: int

    def __post_init__(self):
        if self.end <= self.start:
            raise ValidationError(f"window [{self.start}, {self.end}) is empty")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class AlignmentTransform:
    """Rotation by `angle` radians about `center` (the midpoint of the eye centers)."""

    angle: float
    center: tuple[float, float]
    source_index: int = 0

    def apply_to_points(self, points: np.ndarray) -> np.ndarray:
        """Rotate (k, 2) points about the transform center."""
        pts = np.asarray(points, dtype=np.float64)
        c, s = np.cos(self.angle), np.sin(self.angle)
        d = pts - np.asarray(self.center)
        return np.asarray(self.center) + np.stack(
            [c * d[:, 0] - s * d[:, 1], s * d[:, 0] + c * d[:, 1]], axis=1
        )


@dataclass(frozen=True)
class Box:
    """Integer pixel box, half-open on both axes."""

    x0: int
    y0: int
    x1: int
    y1: int

    @classmethod
    def from_bounds(cls, lo_x: float, lo_y: float, hi_x: float, hi_y: float) -> "Box":
        # pixels whose integer coordinate lies inside the continuous bounds
        return cls(
            int(np.ceil(lo_x)), int(np.ceil(lo_y)),
            int(np.floor(hi_x)) + 1, int(np.floor(hi_y)) + 1,
        )

    def clamp(self, width: int, height: int) -> "Box":
        return Box(
            max(0, self.x0), max(0, self.y0),
            min(width, max(0, self.x1)), min(height, max(0, self.y1)),
        )

    @property
    def area(self) -> int:
        return max(0, self.x1 - self.x0) * max(0, self.y1 - self.y0)

    def intersects(self, other: "Box") -> bool:
        return (
            self.x0 < other.x1 and other.x0 < self.x1
            and self.y0 < other.y1 and other.y0 < self.y1
        )


@dataclass(frozen=True)
class RoiParams:
    """ROI geometry constants, both scaled by the inter-ocular distance."""

    brow_margin_scale: float = 0.15
    mouth_box_scale: float = 0.5


@dataclass(frozen=True)
class RoiSet:
    """The three retained face regions, in aligned pixel coordinates."""

    brow_left: Box
    brow_right: Box
    mouth_corners: tuple[Box, Box]

    def regions(self) -> list[tuple[str, tuple[Box, ...]]]:
        return [
            ("brow_left", (self.brow_left,)),
            ("brow_right", (self.brow_right,)),
            ("mouth_corners", self.mouth_corners),
        ]

    def pairwise_disjoint(self) -> bool:
        boxes = [self.brow_left, self.brow_right, *self.mouth_corners]
        return not any(
            a.intersects(b) for i, a in enumerate(boxes) for b in boxes[i + 1:]
        )


def eye_centers(landmarks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centers of the two eyes as the centroids of their landmark rings."""
    pts = check_landmark_points(landmarks)
    return pts[LEFT_EYE].mean(axis=0), pts[RIGHT_EYE].mean(axis=0)


def compute_alignment(left: np.ndarray, right: np.ndarray, source_index: int = 0) -> AlignmentTransform:
    """Rotation that puts the two eye centers on a horizontal line."""
    left = check_finite(np.asarray(left, dtype=np.float64), "left eye center")
    right = check_finite(np.asarray(right, dtype=np.float64), "right eye center")
    dx, dy = right[0] - left[0], right[1] - left[1]
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometryError("eye centers coincide; cannot derive alignment")
    mid = (float((left[0] + right[0]) / 2.0), float((left[1] + right[1]) / 2.0))
    return AlignmentTransform(angle=-float(np.arctan2(dy, dx)), center=mid, source_index=source_index)


def apply_alignment(frames: np.ndarray, transform: AlignmentTransform) -> np.ndarray:
    """Rotate every frame of a window by the window's single transform.

    Bilinear interpolation; samples outside the frame read as zero. A zero
    angle returns the input unchanged (bit-exact copy).
    """
    frames = np.asarray(frames)
    single = frames.ndim == 2
    stack = frames[np.newaxis] if single else frames
    if transform.angle == 0.0:
        out = stack.copy()
        return out[0] if single else out

    t, h, w = stack.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = transform.center
    c, s = np.cos(-transform.angle), np.sin(-transform.angle)
    dx, dy = xs - cx, ys - cy
    sx = cx + c * dx - s * dy
    sy = cy + s * dx + c * dy

    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx, fy = sx - x0, sy - y0

    out = np.zeros((t, h, w), dtype=np.float64)
    for ox, oy, wgt in (
        (0, 0, (1 - fx) * (1 - fy)),
        (1, 0, fx * (1 - fy)),
        (0, 1, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        xi, yi = x0 + ox, y0 + oy
        valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        xc, yc = np.clip(xi, 0, w - 1), np.clip(yi, 0, h - 1)
        out += (wgt * valid) * stack[:, yc, xc]
    out = out.astype(stack.dtype, copy=False)
    return out[0] if single else out


def generate_windows(
    frame_count: int,
    fps: float,
    params: WindowParams | None = None,
    video_id: str = "",
) -> list[WindowInterval]:
    """Overlapping fixed-length windows covering the video, plus an end-anchored
    tail window when the regular grid stops short of the last frame."""
    params = params or WindowParams()
    params.validate(fps)
    w = params.window_len(fps)
    stride = params.stride(fps)
    if frame_count < w:
        raise TooShortVideoError(f"video has {frame_count} frames, below window length {w}")

    count = (frame_count - w) // stride + 1
    windows = [
        WindowInterval(video_id=video_id, index=j, start=j * stride, end=j * stride + w)
        for j in range(count)
    ]
    if windows[-1].end < frame_count:
        windows.append(
            WindowInterval(video_id=video_id, index=count, start=frame_count - w, end=frame_count)
        )
    return windows


def extract_rois(
    landmarks: np.ndarray,
    transform: AlignmentTransform,
    frame_shape: tuple[int, int],
    params: RoiParams | None = None,
) -> RoiSet:
    """ROIs from the window's first-frame landmarks, in aligned coordinates.

    Brow boxes are landmark bounding boxes expanded upward and outward by a
    margin; mouth-corner boxes are squares centered on the two corners. All
    boxes are clamped to the frame.
    """
    params = params or RoiParams()
    pts = transform.apply_to_points(check_landmark_points(landmarks))
    h, w = frame_shape

    left_eye = pts[LEFT_EYE].mean(axis=0)
    right_eye = pts[RIGHT_EYE].mean(axis=0)
    iod = float(np.linalg.norm(right_eye - left_eye))
    if iod < 1e-9:
        raise DegenerateGeometryError("inter-ocular distance collapsed to zero")

    margin = params.brow_margin_scale * iod

    def brow_box(brow_pts: np.ndarray) -> Box:
        lo = brow_pts.min(axis=0)
        hi = brow_pts.max(axis=0)
        # expand left, right, and upward; the bottom edge stays put so the
        # box cannot reach into the eye below
        return Box.from_bounds(lo[0] - margin, lo[1] - margin, hi[0] + margin, hi[1]).clamp(w, h)

    side = params.mouth_box_scale * iod

    def mouth_box(center: np.ndarray) -> Box:
        return Box.from_bounds(
            center[0] - side / 2, center[1] - side / 2,
            center[0] + side / 2, center[1] + side / 2,
        ).clamp(w, h)

    return RoiSet(
        brow_left=brow_box(pts[LEFT_BROW]),
        brow_right=brow_box(pts[RIGHT_BROW]),
        mouth_corners=(mouth_box(pts[MOUTH_CORNER_LEFT]), mouth_box(pts[MOUTH_CORNER_RIGHT])),
    )
