from .loading import (
    load_dataset,
    load_frames,
    load_ground_truth,
    load_landmarks,
    read_manifest,
    write_dataset,
    write_ground_truth,
    write_landmarks,
    write_manifest,
)
from .synthetic import canonical_landmarks, displace_patch, generate_synthetic
from .types import (
    Dataset,
    DatasetManifest,
    FrameSequence,
    GroundTruthEntry,
    LandmarkSet,
    SyntheticSpec,
    VideoEntry,
)

__all__ = [
    "Dataset",
    "DatasetManifest",
    "FrameSequence",
    "GroundTruthEntry",
    "LandmarkSet",
    "SyntheticSpec",
    "VideoEntry",
    "canonical_landmarks",
    "displace_patch",
    "generate_synthetic",
    "load_dataset",
    "load_frames",
    "load_ground_truth",
    "load_landmarks",
    "read_manifest",
    "write_dataset",
    "write_ground_truth",
    "write_landmarks",
    "write_manifest",
]
