"""HTTP annotation service: proposals, frame serving, decisions, retraining.

State lives in one data directory:

    manifest.json, frames/, landmarks/, gt.csv   dataset (written by `synth`)
    features/<video_id>.msfc                     feature caches (`extract-features`)
    detections.csv                               spotting output (`spot`); kept rows
                                                 become review proposals
    feedback.jsonl                               append-only decision log
    models/v0001.bin, v0002.bin, ...             immutable model versions

Decisions are durable before they are acknowledged: the log line is flushed
and fsynced before the response is built. Replaying the log from an empty
store reconstructs the exact proposal statuses. Retraining is explicit
(endpoint-triggered); the training set is the ground-truth labels overridden
by the annotator's accepted/rejected windows, and every retrain writes a new
immutable model version.
"""
from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from .config import PipelineConfig
from .dataio.loading import load_ground_truth, read_manifest
from .errors import MicrospotError
from .features import FeatureCache, read_feature_cache
from .network.adam import AdamConfig
from .network.model import LstmModel, load_model, save_model
from .network.training import TrainConfig, train
from .spotting import label_windows, read_detections

MODEL_FILE_RE = re.compile(r"^v(\d{4})\.bin$")


@dataclass
class Proposal:
    id: str
    video_id: str
    start: int
    end: int
    confidence: float
    status: str = "pending"  # pending -> accepted | rejected

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "video_id": self.video_id,
            "start": self.start,
            "end": self.end,
            "confidence": self.confidence,
            "status": self.status,
        }


@dataclass(frozen=True)
class FeedbackRecord:
    proposal_id: str
    decision: str
    annotator: str
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "proposal_id": self.proposal_id,
            "decision": self.decision,
            "annotator": self.annotator,
            "timestamp": self.timestamp,
        }


class AnnotationStore:
    """All service state; mutations are serialized through one lock."""

    def __init__(self, data_dir: str | Path, config: PipelineConfig | None = None):
        self.data_dir = Path(data_dir)
        self.config = config or PipelineConfig()
        self.lock = threading.Lock()

        self.manifest = read_manifest(self.data_dir / "manifest.json")
        self.ground_truth = load_ground_truth(self.data_dir / "gt.csv")
        self.frame_files: dict[str, list[Path]] = {}
        for entry in self.manifest.videos:
            frames_dir = self.manifest.resolve(entry.frames_dir)
            self.frame_files[entry.video_id] = sorted(
                p for p in frames_dir.iterdir() if p.suffix.lower() == ".png"
            )

        self.proposals: dict[str, Proposal] = {}
        detections_path = self.data_dir / "detections.csv"
        if detections_path.is_file():
            _, kept = read_detections(detections_path)
            for det in kept:
                pid = f"{det.window.video_id}:{det.window.start}-{det.window.end}"
                self.proposals[pid] = Proposal(
                    id=pid,
                    video_id=det.window.video_id,
                    start=det.window.start,
                    end=det.window.end,
                    confidence=det.confidence,
                )

        self.feedback_path = self.data_dir / "feedback.jsonl"
        self.records: list[FeedbackRecord] = []
        if self.feedback_path.is_file():
            with open(self.feedback_path) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    raw = json.loads(line)
                    record = FeedbackRecord(
                        proposal_id=raw["proposal_id"],
                        decision=raw["decision"],
                        annotator=raw["annotator"],
                        timestamp=raw["timestamp"],
                    )
                    proposal = self.proposals.get(record.proposal_id)
                    if proposal is not None and proposal.status == "pending":
                        proposal.status = record.decision + "ed"
                        self.records.append(record)

        self.models_dir = self.data_dir / "models"
        self.models_dir.mkdir(exist_ok=True)

    # -- proposals -----------------------------------------------------------

    def video_ids(self) -> list[str]:
        return [v.video_id for v in self.manifest.videos]

    def list_proposals(self, video_id: str | None = None, status: str | None = None) -> list[Proposal]:
        if video_id is not None and video_id not in self.frame_files:
            raise KeyError(video_id)
        out = [
            p
            for p in self.proposals.values()
            if (video_id is None or p.video_id == video_id)
            and (status is None or p.status == status)
        ]
        return sorted(out, key=lambda p: (-p.confidence, p.video_id, p.start))

    def frame_bytes(self, video_id: str, index: int) -> bytes:
        files = self.frame_files.get(video_id)
        if files is None:
            raise KeyError(video_id)
        if not (0 <= index < len(files)):
            raise IndexError(index)
        return files[index].read_bytes()

    def post_decision(self, proposal_id: str, decision: str, annotator: str) -> FeedbackRecord:
        with self.lock:
            proposal = self.proposals.get(proposal_id)
            if proposal is None:
                raise KeyError(proposal_id)
            if proposal.status != "pending":
                raise ConflictError(f"proposal {proposal_id} already {proposal.status}")
            record = FeedbackRecord(
                proposal_id=proposal_id,
                decision=decision,
                annotator=annotator,
                timestamp=time.time(),
            )
            # durable before acknowledged
            with open(self.feedback_path, "a") as fh:
                fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            proposal.status = decision + "ed"
            self.records.append(record)
            return record

    # -- models --------------------------------------------------------------

    def model_versions(self) -> list[int]:
        versions = []
        for p in self.models_dir.iterdir():
            m = MODEL_FILE_RE.match(p.name)
            if m:
                versions.append(int(m.group(1)))
        return sorted(versions)

    def model_path(self, version: int) -> Path:
        return self.models_dir / f"v{version:04d}.bin"

    def current_model(self) -> tuple[int, LstmModel, dict] | None:
        versions = self.model_versions()
        if not versions:
            return None
        version = versions[-1]
        model, hyperparams = load_model(self.model_path(version))
        return version, model, hyperparams

    def _load_caches(self) -> list[FeatureCache]:
        features_dir = self.data_dir / "features"
        caches = []
        for entry in self.manifest.videos:
            path = features_dir / f"{entry.video_id}.msfc"
            if not path.is_file():
                raise MicrospotError(f"feature cache missing for video {entry.video_id}: {path}")
            caches.append(read_feature_cache(path))
        return caches

    def training_set(self) -> tuple[np.ndarray, np.ndarray, int, int]:
        """Ground-truth labels overridden by annotator decisions.

        Returns (X, y, n_accepted, n_rejected).
        """
        overrides: dict[str, int] = {}
        for p in self.proposals.values():
            if p.status == "accepted":
                overrides[p.id] = 1
            elif p.status == "rejected":
                overrides[p.id] = 0
        xs, ys = [], []
        n_acc = n_rej = 0
        for cache in self._load_caches():
            labeled = label_windows(cache.windows, [g for g in self.ground_truth if g.video_id == cache.video_id])
            for i, lw in enumerate(labeled):
                pid = f"{cache.video_id}:{lw.window.start}-{lw.window.end}"
                label = int(lw.label)
                if pid in overrides:
                    label = overrides[pid]
                    if label == 1:
                        n_acc += 1
                    else:
                        n_rej += 1
                xs.append(cache.features[i])
                ys.append(label)
        return np.stack(xs), np.array(ys, dtype=np.int64), n_acc, n_rej

    def retrain(self, seed: int | None = None, epochs: int | None = None) -> dict:
        with self.lock:
            if not self.records:
                raise PreconditionError("no feedback recorded yet; nothing to fold back")
            X, y, n_acc, n_rej = self.training_set()
            train_cfg = self.config.train
            if seed is not None or epochs is not None:
                import dataclasses

                train_cfg = dataclasses.replace(
                    train_cfg,
                    **{k: v for k, v in (("seed", seed), ("epochs", epochs)) if v is not None},
                )
            rng = np.random.default_rng(train_cfg.seed)
            model = LstmModel.initialize(
                input_dim=X.shape[2], hidden_size=self.config.hidden_size, rng=rng
            )
            _, history = train(model, X, y, self.config.adam, train_cfg)

            versions = self.model_versions()
            version = (versions[-1] if versions else 0) + 1
            hyperparams = {
                "seed": train_cfg.seed,
                "epochs": train_cfg.epochs,
                "batch_size": train_cfg.batch_size,
                "learning_rate": self.config.adam.learning_rate,
                "n_samples": int(len(y)),
                "n_accepted": n_acc,
                "n_rejected": n_rej,
            }
            save_model(model, self.model_path(version), hyperparams)
            return {
                "version": version,
                "n_samples": int(len(y)),
                "n_positive": int(y.sum()),
                "n_accepted": n_acc,
                "n_rejected": n_rej,
                "first_loss": history[0],
                "final_loss": history[-1],
            }


class ConflictError(MicrospotError):
    pass


class PreconditionError(MicrospotError):
    pass


class DecisionBody(BaseModel):
    decision: Literal["accept", "reject"]
    annotator: str = "anonymous"


class RetrainBody(BaseModel):
    seed: int | None = None
    epochs: int | None = None


def create_app(
    data_dir: str | Path,
    config: PipelineConfig | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    store = AnnotationStore(data_dir, config)
    app = FastAPI(title="microspot annotation service")
    app.state.store = store

    @app.get("/api/videos")
    def videos() -> list[dict]:
        out = []
        for entry in store.manifest.videos:
            proposals = store.list_proposals(video_id=entry.video_id)
            out.append(
                {
                    "video_id": entry.video_id,
                    "subject_id": entry.subject_id,
                    "fps": entry.fps,
                    "frame_count": len(store.frame_files[entry.video_id]),
                    "flow_gap": store.config.flow.gap(entry.fps),
                    "pending": sum(1 for p in proposals if p.status == "pending"),
                    "decided": sum(1 for p in proposals if p.status != "pending"),
                }
            )
        return out

    @app.get("/api/videos/{video_id}/proposals")
    def proposals(video_id: str, status: str | None = None) -> list[dict]:
        try:
            return [p.to_dict() for p in store.list_proposals(video_id=video_id, status=status)]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown video {video_id}")

    @app.get("/api/videos/{video_id}/frames/{index}")
    def frame(video_id: str, index: int) -> Response:
        try:
            data = store.frame_bytes(video_id, index)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown video {video_id}")
        except IndexError:
            raise HTTPException(status_code=404, detail=f"frame {index} out of range")
        return Response(content=data, media_type="image/png")

    @app.post("/api/proposals/{proposal_id}/decision")
    def decide(proposal_id: str, body: DecisionBody) -> dict:
        try:
            record = store.post_decision(proposal_id, body.decision, body.annotator)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown proposal {proposal_id}")
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return record.to_dict()

    @app.post("/api/retrain")
    def retrain(body: RetrainBody | None = None) -> dict:
        body = body or RetrainBody()
        try:
            return store.retrain(seed=body.seed, epochs=body.epochs)
        except PreconditionError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except MicrospotError as exc:
            # prior model version stays active; surface diagnostics
            raise HTTPException(status_code=500, detail=f"retraining failed: {exc}")

    @app.get("/api/model")
    def model_info() -> dict:
        current = store.current_model()
        if current is None:
            raise HTTPException(status_code=404, detail="no model trained yet")
        version, model, hyperparams = current
        return {
            "version": version,
            "input_dim": model.input_dim,
            "hidden_size": model.hidden_size,
            "hyperparams": hyperparams,
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
