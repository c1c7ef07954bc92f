import json
import shutil
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from microspot.config import PipelineConfig
from microspot.dataio import SyntheticSpec, generate_synthetic, write_dataset
from microspot.features import (
    FeatureCache,
    HoofParams,
    extract_video_features,
    params_fingerprint,
    write_feature_cache,
)
from microspot.network import AdamConfig, LstmModel, TrainConfig, save_model, train
from microspot.optflow import FlowParams
from microspot.preprocess import RoiParams, WindowParams
from microspot.service import AnnotationStore, create_app
from microspot.spotting import label_windows, nms, score_windows, write_detections

HOOF = HoofParams(min_magnitude=0.4)
SERVICE_CONFIG = PipelineConfig().replace_section("hoof", min_magnitude=0.4)
SERVICE_CONFIG = SERVICE_CONFIG.replace_section("train", epochs=40, class_weights="balanced")


def build_data_dir(root: Path, seed: int = 21) -> Path:
    """Dataset + features + model v1 + detections, as the CLI would lay them out."""
    spec = SyntheticSpec(
        seed=seed, n_videos=3, frames_per_video=260, fps=200.0, n_movements=1,
        duration_range=(16, 28), width=48, height=48, n_subjects=3,
    )
    dataset = generate_synthetic(spec)
    write_dataset(dataset, root)

    features_dir = root / "features"
    features_dir.mkdir()
    fingerprint = params_fingerprint(WindowParams(), RoiParams(), FlowParams(), HOOF)
    xs, ys, feats_by_video = [], [], {}
    for seq in dataset.sequences:
        feats = extract_video_features(
            seq, dataset.landmarks_for(seq.video_id), hoof_params=HOOF
        )
        feats_by_video[seq.video_id] = feats
        write_feature_cache(
            FeatureCache.from_sequences(seq, feats, fingerprint),
            features_dir / f"{seq.video_id}.msfc",
        )
        labeled = label_windows([f.window for f in feats], dataset.gt_for(seq.video_id))
        xs.extend(f.features for f in feats)
        ys.extend(int(lw.label) for lw in labeled)

    model = LstmModel.initialize(24, 12, rng=np.random.default_rng(0))
    train(model, np.stack(xs), np.array(ys), AdamConfig(),
          TrainConfig(epochs=40, seed=0, class_weights="balanced"))
    models_dir = root / "models"
    models_dir.mkdir()
    save_model(model, models_dir / "v0001.bin", hyperparams={"seed": 0})

    detections, kept = [], []
    for seq in dataset.sequences:
        scored = score_windows(feats_by_video[seq.video_id], model)
        above = [d for d in scored if d.confidence >= 0.5]
        detections.extend(above)
        kept.extend(nms(above))
    write_detections(root / "detections.csv", detections, kept)
    return root


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    return build_data_dir(tmp_path_factory.mktemp("service") / "data")


@pytest.fixture()
def fresh_dir(data_dir, tmp_path):
    """Private copy so mutation tests don't interfere."""
    target = tmp_path / "data"
    shutil.copytree(data_dir, target)
    return target


@pytest.fixture()
def client(fresh_dir):
    return TestClient(create_app(fresh_dir, SERVICE_CONFIG))


class TestVideoEndpoints:
    def test_list_videos(self, client):
        videos = client.get("/api/videos").json()
        assert [v["video_id"] for v in videos] == ["v000", "v001", "v002"]
        assert all(v["frame_count"] == 260 and v["fps"] == 200.0 for v in videos)
        assert all(v["flow_gap"] == 4 for v in videos)

    def test_proposals_sorted_by_confidence(self, client):
        props = client.get("/api/videos/v000/proposals").json()
        confidences = [p["confidence"] for p in props]
        assert confidences == sorted(confidences, reverse=True)
        assert all(p["status"] == "pending" for p in props)

    def test_unknown_video_404(self, client):
        assert client.get("/api/videos/ghost/proposals").status_code == 404

    def test_frame_bytes_match_file(self, client, fresh_dir):
        data = client.get("/api/videos/v000/frames/0")
        assert data.status_code == 200
        assert data.headers["content-type"] == "image/png"
        on_disk = (fresh_dir / "frames" / "v000" / "000000.png").read_bytes()
        assert data.content == on_disk

    def test_frame_decodes_to_first_frame(self, client, fresh_dir):
        import io

        from PIL import Image

        from microspot.dataio import load_dataset

        data = client.get("/api/videos/v000/frames/0").content
        img = np.asarray(Image.open(io.BytesIO(data)))
        ds = load_dataset(fresh_dir / "manifest.json")
        expected = np.round(np.asarray(ds.sequence("v000").frames[0], dtype=np.float64) * 255)
        np.testing.assert_array_equal(img, expected.astype(np.uint8))

    def test_out_of_range_frame_404(self, client):
        assert client.get("/api/videos/v000/frames/260").status_code == 404

    def test_repeated_fetch_identical(self, client):
        a = client.get("/api/videos/v000/frames/7").content
        b = client.get("/api/videos/v000/frames/7").content
        assert a == b


class TestDecisions:
    def pending_id(self, client):
        for vid in ("v000", "v001", "v002"):
            props = client.get(f"/api/videos/{vid}/proposals", params={"status": "pending"}).json()
            if props:
                return props[0]["id"], vid
        pytest.skip("fixture produced no pending proposals")

    def test_accept_updates_status_and_log(self, client, fresh_dir):
        pid, vid = self.pending_id(client)
        log = fresh_dir / "feedback.jsonl"
        before = log.read_text().splitlines() if log.exists() else []
        resp = client.post(f"/api/proposals/{pid}/decision",
                           json={"decision": "accept", "annotator": "alice"})
        assert resp.status_code == 200
        record = resp.json()
        assert record["proposal_id"] == pid and record["decision"] == "accept"
        after = log.read_text().splitlines()
        assert len(after) == len(before) + 1
        assert json.loads(after[-1])["annotator"] == "alice"
        props = client.get(f"/api/videos/{vid}/proposals", params={"status": "pending"}).json()
        assert pid not in [p["id"] for p in props]

    def test_second_decision_conflicts(self, client, fresh_dir):
        pid, _ = self.pending_id(client)
        assert client.post(f"/api/proposals/{pid}/decision", json={"decision": "accept"}).status_code == 200
        log_before = (fresh_dir / "feedback.jsonl").read_text()
        resp = client.post(f"/api/proposals/{pid}/decision", json={"decision": "reject"})
        assert resp.status_code == 409
        assert (fresh_dir / "feedback.jsonl").read_text() == log_before

    def test_unknown_proposal_404(self, client):
        resp = client.post("/api/proposals/ghost:0-1/decision", json={"decision": "accept"})
        assert resp.status_code == 404

    def test_invalid_decision_rejected(self, client):
        pid, _ = self.pending_id(client)
        resp = client.post(f"/api/proposals/{pid}/decision", json={"decision": "maybe"})
        assert resp.status_code == 422

    def test_restart_replays_log(self, client, fresh_dir):
        pid, vid = self.pending_id(client)
        client.post(f"/api/proposals/{pid}/decision", json={"decision": "accept"})
        reopened = TestClient(create_app(fresh_dir, SERVICE_CONFIG))
        props = reopened.get(f"/api/videos/{vid}/proposals").json()
        status = {p["id"]: p["status"] for p in props}
        assert status[pid] == "accepted"


class TestRetrain:
    def test_no_feedback_is_precondition_error(self, client):
        assert client.post("/api/retrain", json={}).status_code == 400

    def test_retrain_creates_new_immutable_version(self, client, fresh_dir):
        v1_bytes = (fresh_dir / "models" / "v0001.bin").read_bytes()
        pid = client.get("/api/videos/v000/proposals").json()[0]["id"]
        client.post(f"/api/proposals/{pid}/decision", json={"decision": "reject"})
        resp = client.post("/api/retrain", json={"seed": 5, "epochs": 6})
        assert resp.status_code == 200
        body = resp.json()
        assert body["version"] == 2
        assert body["n_rejected"] == 1
        assert "final_loss" in body and np.isfinite(body["final_loss"])
        assert (fresh_dir / "models" / "v0002.bin").is_file()
        assert (fresh_dir / "models" / "v0001.bin").read_bytes() == v1_bytes
        info = client.get("/api/model").json()
        assert info["version"] == 2

    def test_same_log_same_seed_identical_checkpoint(self, data_dir, tmp_path):
        checkpoints = []
        for name in ("a", "b"):
            root = tmp_path / name
            shutil.copytree(data_dir, root)
            c = TestClient(create_app(root, SERVICE_CONFIG))
            pid = c.get("/api/videos/v000/proposals").json()[0]["id"]
            c.post(f"/api/proposals/{pid}/decision", json={"decision": "accept"})
            assert c.post("/api/retrain", json={"seed": 11, "epochs": 5}).status_code == 200
            checkpoints.append((root / "models" / "v0002.bin").read_bytes())
        assert checkpoints[0] == checkpoints[1]

    def test_model_info_without_models_404(self, fresh_dir):
        shutil.rmtree(fresh_dir / "models")
        client = TestClient(create_app(fresh_dir, SERVICE_CONFIG))
        assert client.get("/api/model").status_code == 404


class TestStoreDirectly:
    def test_list_filters(self, fresh_dir):
        store = AnnotationStore(fresh_dir, SERVICE_CONFIG)
        everything = store.list_proposals()
        assert everything
        only_v1 = store.list_proposals(video_id="v001")
        assert all(p.video_id == "v001" for p in only_v1)
        with pytest.raises(KeyError):
            store.list_proposals(video_id="ghost")

    def test_empty_store_lists_empty(self, tmp_path):
        spec = SyntheticSpec(seed=1, n_videos=1, frames_per_video=120, fps=200.0,
                             n_movements=0, width=32, height=32)
        write_dataset(generate_synthetic(spec), tmp_path / "d")
        store = AnnotationStore(tmp_path / "d", SERVICE_CONFIG)
        assert store.list_proposals() == []
