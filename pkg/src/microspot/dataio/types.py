"""Core dataset types: frame sequences, landmarks, ground truth, manifests."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from ..util import iround
from ..validation import check_finite, check_frames


@dataclass
class FrameSequence:
    """Ordered grayscale frames of one video, intensities normalized to [0, 1]."""

    video_id: str
    subject_id: str
    fps: float
    frames: np.ndarray  # (T, H, W) float32

    def __post_init__(self):
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        self.frames = check_frames(np.asarray(self.frames, dtype=np.float32))
        self.frames.flags.writeable = False

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]


@dataclass
class LandmarkSet:
    """68-point landmarks, per frame or a single static entry for frame 0."""

    video_id: str
    frame_indices: np.ndarray  # (K,) int64, sorted
    points: np.ndarray  # (K, 68, 2) float64

    def __post_init__(self):
        self.frame_indices = np.asarray(self.frame_indices, dtype=np.int64)
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 3 or self.points.shape[1:] != (68, 2):
            raise ValidationError(f"landmarks must have shape (K, 68, 2), got {self.points.shape}")
        if self.frame_indices.shape != (self.points.shape[0],):
            raise ValidationError("frame indices and landmark entries disagree in length")
        if self.points.shape[0] == 0:
            raise ValidationError("landmark set is empty")
        if not np.all(np.diff(self.frame_indices) > 0):
            raise ValidationError("landmark frame indices must be strictly increasing")
        check_finite(self.points, "landmark points")
        self.frame_indices.flags.writeable = False
        self.points.flags.writeable = False

    @property
    def static(self) -> bool:
        """A single frame-0 entry applies to every frame of the video."""
        return self.points.shape[0] == 1 and int(self.frame_indices[0]) == 0

    def for_frame(self, index: int) -> np.ndarray:
        if self.static:
            return self.points[0]
        pos = np.searchsorted(self.frame_indices, index)
        if pos < len(self.frame_indices) and self.frame_indices[pos] == index:
            return self.points[pos]
        raise ValidationError(f"no landmarks for frame {index} of video {self.video_id}")


@dataclass(frozen=True)
class GroundTruthEntry:
    """One annotated micro-movement; onset/apex/offset are 1-based inclusive."""

    video_id: str
    subject_id: str
    onset: int
    apex: int
    offset: int
    au_codes: str = ""

    def __post_init__(self):
        if not (1 <= self.onset <= self.apex <= self.offset):
            raise ValidationError(
                f"ground truth for {self.video_id} must satisfy 1 <= onset <= apex <= offset, "
                f"got ({self.onset}, {self.apex}, {self.offset})"
            )

    @property
    def interval(self) -> tuple[int, int]:
        """The annotated interval as 0-based half-open frame bounds."""
        return (self.onset - 1, self.offset)

    @property
    def length(self) -> int:
        return self.offset - self.onset + 1


@dataclass(frozen=True)
class VideoEntry:
    video_id: str
    subject_id: str
    frames_dir: str
    fps: float
    landmarks_path: str


@dataclass(frozen=True)
class DatasetManifest:
    """Describes where a dataset lives on disk; paths are relative to the manifest."""

    videos: tuple[VideoEntry, ...]
    ground_truth_path: str
    root: Path = Path(".")

    def __post_init__(self):
        ids = [v.video_id for v in self.videos]
        if len(set(ids)) != len(ids):
            raise ValidationError("manifest video ids must be unique")

    def resolve(self, rel: str) -> Path:
        return (self.root / rel).resolve()


@dataclass
class Dataset:
    """Loaded sequences, landmarks, and ground truth, cross-linked by video id."""

    sequences: list[FrameSequence]
    landmarks: list[LandmarkSet]
    ground_truth: list[GroundTruthEntry]

    def __post_init__(self):
        seq_ids = {s.video_id for s in self.sequences}
        if len(seq_ids) != len(self.sequences):
            raise ValidationError("duplicate video ids in dataset")
        lm_ids = {l.video_id for l in self.landmarks}
        if lm_ids != seq_ids:
            raise ValidationError("landmark video ids do not match sequence video ids")
        by_id = {s.video_id: s for s in self.sequences}
        for gt in self.ground_truth:
            seq = by_id.get(gt.video_id)
            if seq is None:
                raise ValidationError(f"ground truth references unknown video {gt.video_id}")
            if gt.offset > seq.frame_count:
                raise ValidationError(
                    f"ground truth offset {gt.offset} exceeds frame count {seq.frame_count} "
                    f"for video {gt.video_id}"
                )
        for lm in self.landmarks:
            seq = by_id[lm.video_id]
            if int(lm.frame_indices[-1]) >= seq.frame_count:
                raise ValidationError(f"landmarks reference frames beyond video {lm.video_id}")

    def sequence(self, video_id: str) -> FrameSequence:
        for s in self.sequences:
            if s.video_id == video_id:
                return s
        raise KeyError(video_id)

    def landmarks_for(self, video_id: str) -> LandmarkSet:
        for l in self.landmarks:
            if l.video_id == video_id:
                return l
        raise KeyError(video_id)

    def gt_for(self, video_id: str) -> list[GroundTruthEntry]:
        return [g for g in self.ground_truth if g.video_id == video_id]

    def subjects(self) -> list[str]:
        return sorted({s.subject_id for s in self.sequences})

    def videos_of_subject(self, subject_id: str) -> list[str]:
        return sorted(s.video_id for s in self.sequences if s.subject_id == subject_id)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the deterministic desk-scale synthetic dataset generator."""

    seed: int = 0
    n_videos: int = 6
    frames_per_video: int = 1000
    fps: float = 200.0
    n_movements: int = 3
    amplitude_px: float = 6.0
    duration_range: tuple[int, int] = (24, 48)
    noise_std: float = 0.001
    width: int = 64
    height: int = 64
    n_subjects: int | None = None

    def __post_init__(self):
        if min(self.n_videos, self.frames_per_video, self.width, self.height) < 1:
            raise ValidationError("synthetic counts must be positive")
        if self.fps <= 0:
            raise ValidationError("fps must be positive")
        if self.n_movements < 0 or self.amplitude_px < 0 or self.noise_std < 0:
            raise ValidationError("movements, amplitude, and noise must be nonnegative")
        window_len = iround(0.5 * self.fps)
        lo, hi = self.duration_range
        if not (1 <= lo <= hi):
            raise ValidationError(f"duration range {self.duration_range} must satisfy 1 <= lo <= hi")
        if hi > window_len:
            raise ValidationError(
                f"movement duration {hi} exceeds the window length {window_len}"
            )
        if self.n_subjects is not None and not (1 <= self.n_subjects <= self.n_videos):
            raise ValidationError("n_subjects must lie in [1, n_videos]")
