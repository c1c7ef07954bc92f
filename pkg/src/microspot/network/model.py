"""Parameters of the 2-layer recurrent classifier and checkpoint persistence."""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from ..util import canonical_json

MODEL_MAGIC = b"MSLM"
MODEL_VERSION = 1
GATE_ORDER = "ifgo"  # input, forget, cell candidate, output

PARAM_NAMES = (
    "l0_wx", "l0_wh", "l0_b",
    "l1_wx", "l1_wh", "l1_b",
    "dense_w", "dense_b",
)


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape: tuple[int, ...]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def orthogonal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Orthogonal matrix (orthonormal rows when rows <= cols)."""
    big, small = max(rows, cols), min(rows, cols)
    a = rng.standard_normal((big, small))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return q[:rows, :cols]


@dataclass
class LstmModel:
    """Two stacked LSTM layers plus a dense softmax head.

    Kernels hold the four gates side by side in the fixed order
    (input, forget, cell candidate, output), each block `hidden` wide.
    """

    l0_wx: np.ndarray  # (input_dim, 4H)
    l0_wh: np.ndarray  # (H, 4H)
    l0_b: np.ndarray   # (4H,)
    l1_wx: np.ndarray  # (H, 4H)
    l1_wh: np.ndarray  # (H, 4H)
    l1_b: np.ndarray   # (4H,)
    dense_w: np.ndarray  # (H, n_classes)
    dense_b: np.ndarray  # (n_classes,)

    def __post_init__(self):
        h = self.hidden_size
        expected = {
            "l0_wx": (self.input_dim, 4 * h),
            "l0_wh": (h, 4 * h),
            "l0_b": (4 * h,),
            "l1_wx": (h, 4 * h),
            "l1_wh": (h, 4 * h),
            "l1_b": (4 * h,),
            "dense_w": (h, self.n_classes),
            "dense_b": (self.n_classes,),
        }
        for name, shape in expected.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValidationError(f"parameter {name} must have shape {shape}, got {arr.shape}")
            if not np.isfinite(arr).all():
                raise ValidationError(f"parameter {name} contains non-finite values")
            setattr(self, name, arr)

    @property
    def input_dim(self) -> int:
        return self.l0_wx.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.l0_wh.shape[0]

    @property
    def n_classes(self) -> int:
        return self.dense_w.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @classmethod
    def initialize(
        cls,
        input_dim: int,
        hidden_size: int = 12,
        n_classes: int = 2,
        rng: np.random.Generator | None = None,
    ) -> "LstmModel":
        """Glorot-uniform input kernels, orthogonal recurrent kernels, zero
        biases except a forget-gate bias of one."""
        rng = rng or np.random.default_rng(0)
        h = hidden_size

        def bias() -> np.ndarray:
            b = np.zeros(4 * h)
            b[h:2 * h] = 1.0
            return b

        return cls(
            l0_wx=glorot_uniform(rng, input_dim, 4 * h, (input_dim, 4 * h)),
            l0_wh=orthogonal(rng, h, 4 * h),
            l0_b=bias(),
            l1_wx=glorot_uniform(rng, h, 4 * h, (h, 4 * h)),
            l1_wh=orthogonal(rng, h, 4 * h),
            l1_b=bias(),
            dense_w=glorot_uniform(rng, h, n_classes, (h, n_classes)),
            dense_b=np.zeros(n_classes),
        )

    def copy(self) -> "LstmModel":
        return LstmModel(**{k: v.copy() for k, v in self.params().items()})


def save_model(model: LstmModel, path: str | Path, hyperparams: dict | None = None) -> None:
    """Versioned binary checkpoint plus a JSON sidecar of hyperparameters."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<IIII", MODEL_VERSION, model.input_dim, model.hidden_size, model.n_classes))
        fh.write(GATE_ORDER.encode("ascii"))
        for name in PARAM_NAMES:
            fh.write(np.ascontiguousarray(getattr(model, name), dtype="<f8").tobytes())
    sidecar = {
        "format_version": MODEL_VERSION,
        "input_dim": model.input_dim,
        "hidden_size": model.hidden_size,
        "n_classes": model.n_classes,
        "gate_order": GATE_ORDER,
        "hyperparams": hyperparams or {},
    }
    Path(str(path) + ".json").write_text(canonical_json(sidecar) + "\n")


def load_model(path: str | Path) -> tuple[LstmModel, dict]:
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(4) != MODEL_MAGIC:
            raise ValidationError(f"{path}: not a model checkpoint")
        version, input_dim, hidden, n_classes = struct.unpack("<IIII", fh.read(16))
        if version != MODEL_VERSION:
            raise ValidationError(f"{path}: unsupported checkpoint version {version}")
        gate_order = fh.read(4).decode("ascii")
        if gate_order != GATE_ORDER:
            raise ValidationError(f"{path}: unexpected gate order {gate_order!r}")
        shapes = {
            "l0_wx": (input_dim, 4 * hidden),
            "l0_wh": (hidden, 4 * hidden),
            "l0_b": (4 * hidden,),
            "l1_wx": (hidden, 4 * hidden),
            "l1_wh": (hidden, 4 * hidden),
            "l1_b": (4 * hidden,),
            "dense_w": (hidden, n_classes),
            "dense_b": (n_classes,),
        }
        arrays = {}
        for name in PARAM_NAMES:
            count = int(np.prod(shapes[name]))
            arrays[name] = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shapes[name]).copy()
    sidecar_path = Path(str(path) + ".json")
    hyperparams = {}
    if sidecar_path.is_file():
        hyperparams = json.loads(sidecar_path.read_text()).get("hyperparams", {})
    return LstmModel(**arrays), hyperparams
