"""Small shared helpers: deterministic rounding, canonical JSON, hashing."""
from __future__ import annotations

import hashlib
import json
import math
from typing import Any


def iround(x: float) -> int:
    """Round half away from zero, independent of banker's rounding."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def canonical_json(obj: Any) -> str:
    """Deterministic JSON encoding (sorted keys, compact separators)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()
