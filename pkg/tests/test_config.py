import json

import pytest

from microspot.config import PipelineConfig
from microspot.errors import ValidationError


class TestPipelineConfig:
    def test_defaults_round_trip(self, tmp_path):
        cfg = PipelineConfig()
        path = tmp_path / "cfg.json"
        cfg.save(path)
        loaded = PipelineConfig.load(path)
        assert loaded == cfg

    def test_partial_file_overrides_defaults(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"flow": {"alpha": 0.5}, "hidden_size": 8}))
        cfg = PipelineConfig.load(path)
        assert cfg.flow.alpha == 0.5
        assert cfg.flow.iterations == 200  # untouched default
        assert cfg.hidden_size == 8
        assert cfg.window.window_seconds == 0.5

    def test_replace_section_flags_win(self):
        cfg = PipelineConfig()
        updated = cfg.replace_section("window", overlap_seconds=0.25, window_seconds=None)
        assert updated.window.overlap_seconds == 0.25
        assert updated.window.window_seconds == 0.5
        assert cfg.window.overlap_seconds == 0.3  # original untouched

    def test_unknown_section_rejected(self):
        with pytest.raises(ValidationError):
            PipelineConfig.from_dict({"bogus": {}})

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            PipelineConfig.from_dict({"flow": {"turbo": True}})

    def test_class_weights_list_becomes_tuple(self):
        cfg = PipelineConfig.from_dict({"train": {"class_weights": [1.0, 4.0]}})
        assert cfg.train.class_weights == (1.0, 4.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            PipelineConfig.load(tmp_path / "none.json")

    def test_invalid_threshold(self):
        with pytest.raises(ValidationError):
            PipelineConfig.from_dict({"spot": {"threshold": 2.0}})
