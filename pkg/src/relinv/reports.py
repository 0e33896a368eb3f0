"""Line-oriented ``key: value`` reports and their JSON twin."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np


def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def format_kv(fields) -> str:
    """Render a mapping as ``key: value`` lines, skipping None values."""
    return "".join(f"{k}: {format_value(v)}\n" for k, v in fields.items() if v is not None)


def parse_kv(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(":")
        out[key.strip()] = value.strip()
    return out


@dataclass
class PropertyReport:
    """Outcome of a seeded property run."""

    name: str
    trials: int
    seed: int
    max_residual: float
    passed: bool
    tolerance: float | None = None
    counterexample: str | None = None

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return {k: d[k] for k in ("name", "trials", "seed", "max_residual", "pass",
                                  "tolerance", "counterexample")}

    def to_text(self) -> str:
        return format_kv(self.to_dict())

    def to_json(self) -> str:
        return json.dumps(self.to_dict())
