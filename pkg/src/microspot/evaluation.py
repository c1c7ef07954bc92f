"""Leave-one-subject-out evaluation: fold construction, TP/FP/FN matching,
metrics, and ROC generation.

A kept detection is a true positive when some not-yet-matched annotated
interval is covered at >= 80% by it; every annotation can justify at most one
detection. False negatives are the annotations left unmatched.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio.types import Dataset, GroundTruthEntry
from .errors import ContractViolationError, ValidationError
from .features import (
    HoofParams,
    HoofSequence,
    extract_video_features,
)
from .network.adam import AdamConfig
from .network.model import LstmModel
from .network.training import TrainConfig, train
from .optflow import FlowParams
from .preprocess import RoiParams, WindowParams
from .spotting import (
    OVERLAP_THRESHOLD,
    Detection,
    label_windows,
    nms,
    overlap_ratio,
    score_windows,
)


@dataclass(frozen=True)
class LosoFold:
    subject_id: str
    train_videos: tuple[str, ...]
    test_videos: tuple[str, ...]


@dataclass
class FoldResult:
    subject_id: str
    tp: int
    fp: int
    fn: int
    n_train: int
    n_test_windows: int


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    recall: float
    precision: float
    f1: float
    auc: float
    threshold: float
    recall_defined: bool
    precision_defined: bool
    folds: list[FoldResult] = field(default_factory=list)
    roc: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "auc": self.auc,
            "threshold": self.threshold,
            "recall_defined": self.recall_defined,
            "precision_defined": self.precision_defined,
            "folds": [
                {
                    "subject": f.subject_id,
                    "tp": f.tp,
                    "fp": f.fp,
                    "fn": f.fn,
                    "n_train": f.n_train,
                    "n_test_windows": f.n_test_windows,
                }
                for f in self.folds
            ],
            "roc": [[fpr, tpr] for fpr, tpr in self.roc],
        }


def loso_folds(dataset: Dataset) -> list[LosoFold]:
    """One fold per distinct subject; the fold tests all of that subject's videos."""
    subjects = dataset.subjects()
    if len(subjects) < 2:
        raise ValidationError("leave-one-subject-out needs at least 2 subjects")
    folds = []
    for subject in subjects:
        test = tuple(dataset.videos_of_subject(subject))
        study = tuple(
            v.video_id for v in dataset.sequences if v.subject_id != subject
        )
        folds.append(LosoFold(subject_id=subject, train_videos=study, test_videos=test))
    return folds


def match_detections(
    detections: list[Detection], ground_truth: list[GroundTruthEntry]
) -> tuple[int, int, int, list[tuple[Detection, GroundTruthEntry]]]:
    """Greedy confidence-descending TP assignment, one annotation per detection."""
    for i, a in enumerate(detections):
        for b in detections[i + 1:]:
            if a.window.video_id == b.window.video_id and (
                a.window.start < b.window.end and b.window.start < a.window.end
            ):
                raise ContractViolationError(
                    "match_detections expects post-NMS (pairwise disjoint) detections"
                )
    matched: set[int] = set()
    matches: list[tuple[Detection, GroundTruthEntry]] = []
    tp = fp = 0
    for det in sorted(detections, key=lambda d: (-d.confidence, d.window.start)):
        best_idx = -1
        best_ratio = 0.0
        for gi, gt in enumerate(ground_truth):
            if gi in matched or gt.video_id != det.window.video_id:
                continue
            ratio = overlap_ratio(det.window, gt.interval)
            if ratio > best_ratio:
                best_idx, best_ratio = gi, ratio
        if best_ratio >= OVERLAP_THRESHOLD:
            matched.add(best_idx)
            matches.append((det, ground_truth[best_idx]))
            tp += 1
        else:
            fp += 1
    fn = len(ground_truth) - tp
    return tp, fp, fn, matches


def metrics(tp: int, fp: int, fn: int) -> tuple[float, float, float, bool, bool]:
    """(recall, precision, f1, recall_defined, precision_defined).

    Degenerate denominators yield 0 with the corresponding flag cleared.
    """
    if min(tp, fp, fn) < 0:
        raise ValidationError("counts must be nonnegative")
    recall_defined = (tp + fn) > 0
    precision_defined = (tp + fp) > 0
    recall = tp / (tp + fn) if recall_defined else 0.0
    precision = tp / (tp + fp) if precision_defined else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
    return recall, precision, f1, recall_defined, precision_defined


def roc_curve(scores: np.ndarray, labels: np.ndarray) -> list[tuple[float, float]]:
    """(FPR, TPR) swept over all distinct confidence thresholds, with the
    (0,0) and (1,1) endpoints; per-window scores, before suppression."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValidationError("scores and labels must be matching 1-D arrays")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC needs both classes present")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    for i in range(len(sorted_scores)):
        tp += int(sorted_labels[i])
        fp += int(not sorted_labels[i])
        # emit a point only after consuming every window at this threshold
        if i + 1 == len(sorted_scores) or sorted_scores[i + 1] != sorted_scores[i]:
            points.append((fp / n_neg, tp / n_pos))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return points


def roc_auc(points: list[tuple[float, float]]) -> float:
    fpr = np.array([p[0] for p in points])
    tpr = np.array([p[1] for p in points])
    return float(np.trapezoid(tpr, fpr))


def run_loso_evaluation(
    dataset: Dataset,
    window_params: WindowParams | None = None,
    roi_params: RoiParams | None = None,
    flow_params: FlowParams | None = None,
    hoof_params: HoofParams | None = None,
    adam_config: AdamConfig | None = None,
    train_config: TrainConfig | None = None,
    threshold: float = 0.5,
    hidden_size: int = 12,
    features_by_video: dict[str, list[HoofSequence]] | None = None,
) -> EvalReport:
    """Full protocol: per fold, train on the other subjects' windows, spot the
    held-out videos, suppress, and match; metrics and ROC pool over folds.

    `features_by_video` short-circuits feature extraction (features do not
    depend on the fold split, so they are computed once).
    """
    window_params = window_params or WindowParams()
    train_config = train_config or TrainConfig()

    if features_by_video is None:
        features_by_video = {
            seq.video_id: extract_video_features(
                seq,
                dataset.landmarks_for(seq.video_id),
                window_params,
                roi_params,
                flow_params,
                hoof_params,
            )
            for seq in dataset.sequences
        }

    labels_by_video: dict[str, np.ndarray] = {}
    for video_id, feats in features_by_video.items():
        labeled = label_windows([f.window for f in feats], dataset.gt_for(video_id))
        labels_by_video[video_id] = np.array([lw.label for lw in labeled], dtype=np.int64)

    folds = loso_folds(dataset)
    fold_results: list[FoldResult] = []
    total_tp = total_fp = total_fn = 0
    pooled_scores: list[float] = []
    pooled_labels: list[int] = []

    for fold in folds:
        train_X = np.concatenate(
            [np.stack([f.features for f in features_by_video[v]]) for v in fold.train_videos]
        )
        train_y = np.concatenate([labels_by_video[v] for v in fold.train_videos])
        rng = np.random.default_rng(train_config.seed)
        model = LstmModel.initialize(
            input_dim=train_X.shape[2], hidden_size=hidden_size, rng=rng
        )
        train(model, train_X, train_y, adam_config, train_config)

        fold_tp = fold_fp = fold_fn = 0
        n_test_windows = 0
        for video_id in fold.test_videos:
            feats = features_by_video[video_id]
            n_test_windows += len(feats)
            scored = score_windows(feats, model)
            pooled_scores.extend(d.confidence for d in scored)
            pooled_labels.extend(labels_by_video[video_id].tolist())
            kept = nms([d for d in scored if d.confidence >= threshold])
            tp, fp, fn, _ = match_detections(kept, dataset.gt_for(video_id))
            fold_tp += tp
            fold_fp += fp
            fold_fn += fn
        fold_results.append(
            FoldResult(
                subject_id=fold.subject_id,
                tp=fold_tp,
                fp=fold_fp,
                fn=fold_fn,
                n_train=len(train_y),
                n_test_windows=n_test_windows,
            )
        )
        total_tp += fold_tp
        total_fp += fold_fp
        total_fn += fold_fn

    recall, precision, f1, r_def, p_def = metrics(total_tp, total_fp, total_fn)
    roc = roc_curve(np.array(pooled_scores), np.array(pooled_labels))
    return EvalReport(
        tp=total_tp,
        fp=total_fp,
        fn=total_fn,
        recall=recall,
        precision=precision,
        f1=f1,
        auc=roc_auc(roc),
        threshold=threshold,
        recall_defined=r_def,
        precision_defined=p_def,
        folds=fold_results,
        roc=roc,
    )


def write_report(report: EvalReport, out_dir: str | Path) -> None:
    """report.json plus metrics.csv and roc.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    with open(out / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for name in ("recall", "precision", "f1", "auc", "tp", "fp", "fn"):
            writer.writerow([name, repr(getattr(report, name))])
    with open(out / "roc.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in report.roc:
            writer.writerow([repr(fpr), repr(tpr)])
