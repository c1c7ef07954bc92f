"""Dataset reading and writing.

On-disk layout (all paths relative to the manifest JSON):

    manifest.json                   {"videos": [...], "ground_truth": "gt.csv"}
    frames/<video_id>/000000.png    lossless grayscale frames, zero-padded index
    landmarks/<video_id>.csv        header: frame,x0,y0,...,x67,y67
    gt.csv                          header: subject,video,onset,apex,offset,au

Ground-truth indices are 1-based inclusive (the common annotation convention)
and are converted to 0-based half-open intervals internally, in exactly one
place (`GroundTruthEntry.interval`). Color inputs are reduced to grayscale by
the Rec. 601 luma formula.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import DatasetError
from .types import (
    Dataset,
    DatasetManifest,
    FrameSequence,
    GroundTruthEntry,
    LandmarkSet,
    VideoEntry,
)

GT_HEADER = ["subject", "video", "onset", "apex", "offset", "au"]
REC601 = np.array([0.299, 0.587, 0.114])


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest {path} is not valid JSON: {exc}") from exc
    try:
        videos = tuple(
            VideoEntry(
                video_id=v["video_id"],
                subject_id=v["subject_id"],
                frames_dir=v["frames_dir"],
                fps=float(v["fps"]),
                landmarks_path=v["landmarks"],
            )
            for v in raw["videos"]
        )
        gt = raw["ground_truth"]
    except KeyError as exc:
        raise DatasetError(f"manifest {path} is missing field {exc}") from exc
    return DatasetManifest(videos=videos, ground_truth_path=gt, root=path.parent)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    payload = {
        "videos": [
            {
                "video_id": v.video_id,
                "subject_id": v.subject_id,
                "frames_dir": v.frames_dir,
                "fps": v.fps,
                "landmarks": v.landmarks_path,
            }
            for v in manifest.videos
        ],
        "ground_truth": manifest.ground_truth_path,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _to_gray(img: Image.Image) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim == 2:
        if arr.dtype == np.uint8:
            return arr.astype(np.float32) / 255.0
        if arr.dtype == np.uint16:
            return arr.astype(np.float32) / 65535.0
        return np.clip(arr.astype(np.float32), 0.0, 1.0)
    rgb = arr[..., :3].astype(np.float64) / 255.0
    return (rgb @ REC601).astype(np.float32)


def load_frames(frames_dir: Path) -> np.ndarray:
    if not frames_dir.is_dir():
        raise DatasetError(f"frame directory not found: {frames_dir}")
    files = sorted(p for p in frames_dir.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise DatasetError(f"no frames found in {frames_dir}")
    frames = []
    for f in files:
        try:
            with Image.open(f) as img:
                frames.append(_to_gray(img))
        except OSError as exc:
            raise DatasetError(f"cannot decode frame {f}: {exc}") from exc
    stack = np.stack(frames)
    return stack


def load_landmarks(path: Path, video_id: str) -> LandmarkSet:
    if not path.is_file():
        raise DatasetError(f"landmark file not found: {path}")
    indices: list[int] = []
    points: list[np.ndarray] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "frame":
            raise DatasetError(f"{path}: expected landmark header starting with 'frame'")
        if (len(header) - 1) != 136:
            raise DatasetError(
                f"{path}: expected 68 landmark coordinate pairs, got {(len(header) - 1) // 2}"
            )
        for row in reader:
            if not row:
                continue
            if len(row) != 137:
                raise DatasetError(f"{path}: row for frame {row[0]} has {len(row)} fields, expected 137")
            indices.append(int(row[0]))
            points.append(np.array(row[1:], dtype=np.float64).reshape(68, 2))
    if not points:
        raise DatasetError(f"{path}: no landmark rows")
    return LandmarkSet(video_id=video_id, frame_indices=np.array(indices), points=np.stack(points))


def write_landmarks(landmarks: LandmarkSet, path: Path) -> None:
    header = ["frame"] + [f"{axis}{i}" for i in range(68) for axis in ("x", "y")]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for idx, pts in zip(landmarks.frame_indices, landmarks.points):
            writer.writerow([int(idx)] + [repr(float(c)) for c in pts.ravel()])


def load_ground_truth(path: Path) -> list[GroundTruthEntry]:
    if not path.is_file():
        raise DatasetError(f"ground-truth table not found: {path}")
    entries = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != GT_HEADER:
            raise DatasetError(f"{path}: expected header {','.join(GT_HEADER)}")
        for row in reader:
            if not row:
                continue
            if len(row) != 6:
                raise DatasetError(f"{path}: malformed row {row}")
            entries.append(
                GroundTruthEntry(
                    subject_id=row[0],
                    video_id=row[1],
                    onset=int(row[2]),
                    apex=int(row[3]),
                    offset=int(row[4]),
                    au_codes=row[5],
                )
            )
    return entries


def write_ground_truth(entries: list[GroundTruthEntry], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GT_HEADER)
        for e in entries:
            writer.writerow([e.subject_id, e.video_id, e.onset, e.apex, e.offset, e.au_codes])


def load_dataset(manifest: DatasetManifest | str | Path, jobs: int = 1) -> Dataset:
    """Load all sequences, landmarks, and ground truth named by a manifest.

    Loading is read-only and parallelizes per video when `jobs` > 1.
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = read_manifest(manifest)

    def load_one(entry: VideoEntry) -> tuple[FrameSequence, LandmarkSet]:
        frames = load_frames(manifest.resolve(entry.frames_dir))
        seq = FrameSequence(
            video_id=entry.video_id, subject_id=entry.subject_id, fps=entry.fps, frames=frames
        )
        lm = load_landmarks(manifest.resolve(entry.landmarks_path), entry.video_id)
        return seq, lm

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            loaded = list(pool.map(load_one, manifest.videos))
    else:
        loaded = [load_one(v) for v in manifest.videos]

    ground_truth = load_ground_truth(manifest.resolve(manifest.ground_truth_path))
    return Dataset(
        sequences=[s for s, _ in loaded],
        landmarks=[l for _, l in loaded],
        ground_truth=ground_truth,
    )


def write_dataset(dataset: Dataset, out_dir: str | Path) -> Path:
    """Write a dataset tree (frames as 8-bit grayscale PNG) and return the manifest path."""
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "landmarks").mkdir(exist_ok=True)

    videos = []
    lm_by_id = {l.video_id: l for l in dataset.landmarks}
    for seq in dataset.sequences:
        frames_dir = out / "frames" / seq.video_id
        frames_dir.mkdir(exist_ok=True)
        data = np.round(np.asarray(seq.frames, dtype=np.float64) * 255.0).astype(np.uint8)
        for i in range(seq.frame_count):
            Image.fromarray(data[i], mode="L").save(frames_dir / f"{i:06d}.png")
        lm_path = out / "landmarks" / f"{seq.video_id}.csv"
        write_landmarks(lm_by_id[seq.video_id], lm_path)
        videos.append(
            VideoEntry(
                video_id=seq.video_id,
                subject_id=seq.subject_id,
                frames_dir=f"frames/{seq.video_id}",
                fps=seq.fps,
                landmarks_path=f"landmarks/{seq.video_id}.csv",
            )
        )

    write_ground_truth(dataset.ground_truth, out / "gt.csv")
    manifest = DatasetManifest(videos=tuple(videos), ground_truth_path="gt.csv", root=out)
    manifest_path = out / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path
