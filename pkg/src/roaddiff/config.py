"""Pipeline configuration with a flat JSON file form."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, fields

from .graph import SCHEMA_VERSION


def parse_alpha(value):
    """Accept a number or the strings ``inf``/``infinity``."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        value = float(value)
    return float(value)


@dataclass(frozen=True)
class PipelineConfig:
    threshold: float = 0.5
    dilation_radius: int = 2
    min_width: int = 3
    search_radius: int = 10
    rdp_epsilon: float = 2.0
    slice_length: float = 20.0
    max_assign_dist: float = 30.0
    alpha: float = math.inf
    d_min: float = 1.0
    heatmap_cell: int = 100
    ratio_low: float = 0.9
    ratio_high: float = 1.1
    pair_count: int = 1000
    seed: int = 0
    min_spur: int = 5
    snap_tolerance: float = 1.0
    map_tolerance: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))
        for name in ("dilation_radius", "min_width", "search_radius", "heatmap_cell",
                     "pair_count", "seed", "min_spur"):
            v = getattr(self, name)
            if int(v) != v:
                raise ValueError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        checks = [
            ("threshold", 0.0 <= self.threshold <= 1.0, "in [0, 1]"),
            ("dilation_radius", self.dilation_radius >= 0, ">= 0"),
            ("min_width", self.min_width >= 1, ">= 1"),
            ("search_radius", self.search_radius >= 0, ">= 0"),
            ("rdp_epsilon", self.rdp_epsilon >= 0, ">= 0"),
            ("slice_length", self.slice_length > 0, "> 0"),
            ("max_assign_dist", self.max_assign_dist > 0, "> 0"),
            ("alpha", self.alpha >= 1, ">= 1 or inf"),
            ("d_min", self.d_min > 0, "> 0"),
            ("heatmap_cell", self.heatmap_cell >= 1, ">= 1"),
            ("ratio_low", 0 < self.ratio_low <= 1, "in (0, 1]"),
            ("ratio_high", self.ratio_high >= 1, ">= 1"),
            ("pair_count", self.pair_count >= 1, ">= 1"),
            ("min_spur", self.min_spur >= 0, ">= 0"),
            ("snap_tolerance", self.snap_tolerance >= 0, ">= 0"),
            ("map_tolerance", self.map_tolerance > 0, "> 0"),
        ]
        for name, ok, rule in checks:
            if not ok:
                raise ValueError(f"{name} must be {rule}, got {getattr(self, name)!r}")

    def to_dict(self):
        d = dataclasses.asdict(self)
        if math.isinf(d["alpha"]):
            d["alpha"] = "inf"
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known - {"schema_version"}
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in known})

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def replace(self, **changes):
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})
