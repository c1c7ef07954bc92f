"""Pipeline-wide configuration: one file holding every module's parameters.

Configs load from JSON; command-line flags override file values, and file
values override the built-in defaults.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .features import HoofParams
from .network.adam import AdamConfig
from .network.training import TrainConfig
from .optflow import FlowParams
from .preprocess import RoiParams, WindowParams


@dataclass(frozen=True)
class SpotParams:
    threshold: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise ValidationError(f"spot threshold must lie in [0, 1], got {self.threshold}")


@dataclass(frozen=True)
class ServiceParams:
    port: int = 8000
    host: str = "127.0.0.1"


@dataclass(frozen=True)
class PipelineConfig:
    window: WindowParams = field(default_factory=WindowParams)
    roi: RoiParams = field(default_factory=RoiParams)
    flow: FlowParams = field(default_factory=FlowParams)
    hoof: HoofParams = field(default_factory=HoofParams)
    adam: AdamConfig = field(default_factory=AdamConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    spot: SpotParams = field(default_factory=SpotParams)
    service: ServiceParams = field(default_factory=ServiceParams)
    hidden_size: int = 12

    _SECTIONS = {
        "window": WindowParams,
        "roi": RoiParams,
        "flow": FlowParams,
        "hoof": HoofParams,
        "adam": AdamConfig,
        "train": TrainConfig,
        "spot": SpotParams,
        "service": ServiceParams,
    }

    def to_dict(self) -> dict:
        out = {name: dataclasses.asdict(getattr(self, name)) for name in self._SECTIONS}
        out["hidden_size"] = self.hidden_size
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        kwargs = {}
        for name, section_cls in cls._SECTIONS.items():
            if name in raw:
                section_raw = dict(raw[name])
                known = {f.name for f in dataclasses.fields(section_cls)}
                unknown = set(section_raw) - known
                if unknown:
                    raise ValidationError(f"unknown config keys in section '{name}': {sorted(unknown)}")
                if name == "train" and isinstance(section_raw.get("class_weights"), list):
                    section_raw["class_weights"] = tuple(section_raw["class_weights"])
                kwargs[name] = section_cls(**section_raw)
        if "hidden_size" in raw:
            kwargs["hidden_size"] = int(raw["hidden_size"])
        unknown = set(raw) - set(cls._SECTIONS) - {"hidden_size"}
        if unknown:
            raise ValidationError(f"unknown config sections: {sorted(unknown)}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"config file not found: {path}")
        try:
            return cls.from_dict(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def replace_section(self, name: str, **updates) -> "PipelineConfig":
        """New config with some fields of one section replaced (flags win)."""
        updates = {k: v for k, v in updates.items() if v is not None}
        if not updates:
            return self
        if name == "hidden_size":
            raise ValidationError("use replace(hidden_size=...) for top-level fields")
        current = getattr(self, name)
        return dataclasses.replace(self, **{name: dataclasses.replace(current, **updates)})
