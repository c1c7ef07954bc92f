"""Window labeling against ground truth, inference, and non-maximum suppression.

A window counts as containing a micro-movement when it covers at least 80%
of an annotated interval. All intervals are 0-based half-open.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio.types import GroundTruthEntry
from .errors import ValidationError
from .features import HoofSequence
from .network.model import LstmModel
from .network.training import predict_batch
from .preprocess import WindowInterval
from .validation import check_probability

OVERLAP_THRESHOLD = 0.8


@dataclass(frozen=True)
class Detection:
    """A window the classifier scored as likely to contain a micro-movement."""

    window: WindowInterval
    confidence: float

    def __post_init__(self):
        check_probability(self.confidence, "confidence")


@dataclass(frozen=True)
class LabeledWindow:
    window: WindowInterval
    label: bool
    matched_gt: GroundTruthEntry | None = None


def overlap_ratio(window: tuple[int, int] | WindowInterval, annotated: tuple[int, int]) -> float:
    """|I intersect S| / |S| for half-open intervals I (window) and S (annotation)."""
    if isinstance(window, WindowInterval):
        window = (window.start, window.end)
    s_start, s_end = annotated
    if s_end <= s_start:
        raise ValidationError(f"annotated interval [{s_start}, {s_end}) is empty")
    inter = min(window[1], s_end) - max(window[0], s_start)
    return max(0, inter) / (s_end - s_start)


def label_windows(
    windows: list[WindowInterval], ground_truth: list[GroundTruthEntry]
) -> list[LabeledWindow]:
    """True label iff some annotated interval is covered at >= 80%; ties go to
    the highest-ratio annotation."""
    out = []
    for win in windows:
        best: GroundTruthEntry | None = None
        best_ratio = 0.0
        for gt in ground_truth:
            if gt.video_id != win.video_id:
                continue
            ratio = overlap_ratio(win, gt.interval)
            if ratio > best_ratio:
                best, best_ratio = gt, ratio
        if best_ratio >= OVERLAP_THRESHOLD:
            out.append(LabeledWindow(window=win, label=True, matched_gt=best))
        else:
            out.append(LabeledWindow(window=win, label=False))
    return out


def spot(
    sequences: list[HoofSequence], model: LstmModel, threshold: float = 0.5
) -> list[Detection]:
    """Score every window and keep those with confidence >= threshold."""
    check_probability(threshold, "threshold")
    if not sequences:
        return []
    confidences = predict_batch(model, np.stack([s.features for s in sequences]))
    return [
        Detection(window=s.window, confidence=float(c))
        for s, c in zip(sequences, confidences)
        if c >= threshold
    ]


def score_windows(sequences: list[HoofSequence], model: LstmModel) -> list[Detection]:
    """Confidences for every window regardless of threshold (ROC input)."""
    if not sequences:
        return []
    confidences = predict_batch(model, np.stack([s.features for s in sequences]))
    return [Detection(window=s.window, confidence=float(c)) for s, c in zip(sequences, confidences)]


def _intersects(a: WindowInterval, b: WindowInterval) -> bool:
    return a.start < b.end and b.start < a.end


def nms(detections: list[Detection]) -> list[Detection]:
    """Greedy non-maximum suppression: repeatedly keep the most confident
    remaining detection and drop everything overlapping it. Ties break toward
    the lower start frame; the result is sorted by start."""
    remaining = sorted(detections, key=lambda d: (-d.confidence, d.window.start))
    kept: list[Detection] = []
    while remaining:
        best = remaining.pop(0)
        kept.append(best)
        remaining = [d for d in remaining if not _intersects(d.window, best.window)]
    return sorted(kept, key=lambda d: d.window.start)


DETECTIONS_HEADER = ["video", "start", "end", "confidence", "kept"]


def write_detections(
    path: str | Path, detections: list[Detection], kept: list[Detection]
) -> None:
    """CSV of all detections; post-NMS survivors carry kept=1."""
    kept_keys = {(d.window.video_id, d.window.start, d.window.end) for d in kept}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DETECTIONS_HEADER)
        for d in sorted(detections, key=lambda d: (d.window.video_id, d.window.start)):
            key = (d.window.video_id, d.window.start, d.window.end)
            writer.writerow(
                [d.window.video_id, d.window.start, d.window.end,
                 repr(d.confidence), 1 if key in kept_keys else 0]
            )


def read_detections(path: str | Path) -> tuple[list[Detection], list[Detection]]:
    """Read a detections CSV back into (all, kept) lists."""
    all_rows: list[Detection] = []
    kept: list[Detection] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DETECTIONS_HEADER:
            raise ValidationError(f"{path}: expected header {','.join(DETECTIONS_HEADER)}")
        for idx, row in enumerate(reader):
            if not row:
                continue
            det = Detection(
                window=WindowInterval(
                    video_id=row[0], index=idx, start=int(row[1]), end=int(row[2])
                ),
                confidence=float(row[3]),
            )
            all_rows.append(det)
            if row[4] == "1":
                kept.append(det)
    return all_rows, kept
