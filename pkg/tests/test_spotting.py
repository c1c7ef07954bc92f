import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from microspot.dataio import GroundTruthEntry
from microspot.errors import ValidationError
from microspot.network import LstmModel
from microspot.preprocess import WindowInterval, generate_windows
from microspot.spotting import (
    Detection,
    label_windows,
    nms,
    overlap_ratio,
    read_detections,
    spot,
    write_detections,
)
from test_network import zero_model


def win(start, end, video="v", index=0):
    return WindowInterval(video_id=video, index=index, start=start, end=end)


def det(start, confidence, length=100, video="v"):
    return Detection(window=win(start, start + length, video=video), confidence=confidence)


class TestOverlapRatio:
    def test_partial_overlap(self):
        assert overlap_ratio((0, 100), (20, 120)) == pytest.approx(0.8, abs=1e-12)

    def test_containment(self):
        assert overlap_ratio((0, 100), (30, 60)) == 1.0

    def test_disjoint(self):
        assert overlap_ratio((0, 100), (200, 250)) == 0.0

    def test_empty_annotation_rejected(self):
        with pytest.raises(ValidationError):
            overlap_ratio((0, 100), (50, 50))

    def test_accepts_window_interval(self):
        assert overlap_ratio(win(0, 100), (20, 120)) == pytest.approx(0.8)


class TestLabelWindows:
    def gt(self, onset, offset, video="v"):
        # 1-based inclusive constructor args; interval is [onset-1, offset)
        return GroundTruthEntry(video_id=video, subject_id="s", onset=onset,
                                apex=onset, offset=offset)

    def test_movement_labels_covering_windows(self):
        windows = generate_windows(500, 200.0, video_id="v")
        labeled = label_windows(windows, [self.gt(50, 80)])  # interval [49, 80)
        by_start = {lw.window.start: lw for lw in labeled}
        assert by_start[0].label and by_start[40].label
        assert not by_start[80].label
        assert by_start[0].matched_gt is not None

    def test_boundary_ratio_exactly_08_is_true(self):
        windows = [win(0, 100), win(40, 140)]
        labeled = label_windows(windows, [self.gt(21, 120)])  # interval [20, 120), len 100
        assert all(lw.label for lw in labeled)

    def test_no_ground_truth_all_false(self):
        windows = generate_windows(300, 200.0, video_id="v")
        assert not any(lw.label for lw in label_windows(windows, []))

    def test_other_video_ignored(self):
        labeled = label_windows([win(0, 100)], [self.gt(10, 60, video="other")])
        assert not labeled[0].label

    def test_matches_highest_ratio_annotation(self):
        # first annotation only 25% covered, second fully contained
        labeled = label_windows([win(0, 100)], [self.gt(91, 130), self.gt(11, 95)])
        assert labeled[0].label
        assert labeled[0].matched_gt.offset == 95


class TestSpot:
    def make_sequences(self, n=5):
        from microspot.features import HoofSequence

        rng = np.random.default_rng(0)
        return [
            HoofSequence(window=win(i * 40, i * 40 + 100, index=i),
                         features=rng.random((25, 24)).astype(np.float32))
            for i in range(n)
        ]

    def test_zero_model_threshold_half_detects_everything(self):
        seqs = self.make_sequences()
        detections = spot(seqs, zero_model(), threshold=0.5)
        assert len(detections) == len(seqs)
        assert all(d.confidence == 0.5 for d in detections)

    def test_threshold_one_with_finite_logits_detects_nothing(self, rng):
        seqs = self.make_sequences()
        model = LstmModel.initialize(24, 12, rng=rng)
        assert spot(seqs, model, threshold=1.0) == []

    def test_empty_input(self):
        assert spot([], zero_model()) == []

    def test_invalid_threshold_rejected(self):
        with pytest.raises(ValidationError):
            spot([], zero_model(), threshold=1.5)


class TestNms:
    def greedy_oracle(self, detections):
        """Literal restatement of the rule, kept independent of the implementation."""
        pool = list(detections)
        kept = []
        while pool:
            best = min(pool, key=lambda d: (-d.confidence, d.window.start))
            kept.append(best)
            pool = [
                d for d in pool
                if d is not best and not (
                    d.window.start < best.window.end and best.window.start < d.window.end
                )
            ]
        return sorted(kept, key=lambda d: d.window.start)

    def test_chain_of_overlaps_keeps_strongest(self):
        dets = [det(0, 0.9), det(40, 0.8), det(80, 0.7)]
        kept = nms(dets)
        assert [(d.window.start, d.confidence) for d in kept] == [(0, 0.9)]

    def test_disjoint_detections_all_kept(self):
        dets = [det(0, 0.7), det(120, 0.9)]
        kept = nms(dets)
        assert [d.window.start for d in kept] == [0, 120]

    def test_empty(self):
        assert nms([]) == []

    def test_tie_breaks_toward_lower_start(self):
        dets = [det(40, 0.8), det(0, 0.8)]
        kept = nms(dets)
        assert [d.window.start for d in kept] == [0]

    def test_matches_oracle_on_random_sets(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = rng.integers(0, 12)
            dets = [
                det(int(rng.integers(0, 500)), float(np.round(rng.random(), 3)))
                for _ in range(n)
            ]
            assert nms(dets) == self.greedy_oracle(dets)

    @settings(max_examples=200, derandomize=True)
    @given(st.lists(st.tuples(st.integers(0, 400), st.floats(0.0, 1.0)), max_size=15))
    def test_properties(self, raw):
        dets = [det(s, c) for s, c in raw]
        kept = nms(dets)
        # pairwise disjoint
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                assert not (a.window.start < b.window.end and b.window.start < a.window.end)
        # idempotent
        assert nms(kept) == kept
        # every suppressed detection overlaps a kept one at least as confident
        for d in dets:
            if d not in kept:
                assert any(
                    k.confidence >= d.confidence
                    and d.window.start < k.window.end
                    and k.window.start < d.window.end
                    for k in kept
                )


class TestDetectionsCsv:
    def test_round_trip(self, tmp_path):
        dets = [det(0, 0.9), det(40, 0.8), det(200, 0.7)]
        kept = nms(dets)
        path = tmp_path / "detections.csv"
        write_detections(path, dets, kept)
        all_rows, kept_rows = read_detections(path)
        assert len(all_rows) == 3
        assert {(d.window.start, d.confidence) for d in kept_rows} == {
            (k.window.start, k.confidence) for k in kept
        }

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope\n1,2,3\n")
        with pytest.raises(ValidationError):
            read_detections(path)
