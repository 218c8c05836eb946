"""Scenario configurations: initial resource conditions and degradations.

Four named presets ship with the package (easy, easy-random-res, hard,
hard-random-res); arbitrary scenarios load from JSON files with the same
keys. Ranged fields are either a single number (fixed) or a [lo, hi] pair
sampled uniformly at reset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .world import bundled_data_path

SCENARIO_NAMES = ("easy", "easy-random-res", "hard", "hard-random-res")

Ranged = float | tuple[float, float]


class ScenarioError(ValueError):
    """Malformed scenario configuration."""


def _as_ranged(value) -> Ranged:
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        lo, hi = float(value[0]), float(value[1])
        if lo > hi:
            raise ScenarioError(f"range [{lo}, {hi}] is not well ordered")
        return (lo, hi)
    raise ScenarioError(f"expected number or [lo, hi] pair, got {value!r}")


def sample_ranged(value: Ranged, rng: np.random.Generator) -> float:
    if isinstance(value, tuple):
        return float(rng.uniform(value[0], value[1]))
    return float(value)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    initial_battery: Ranged = 1.0        # fraction of capacity
    initial_storage: Ranged = 0.0        # fraction of capacity used
    initial_rw_rpm: Ranged = 0.0         # per-axis; range sampled per axis
    disturbance_scale: float = 0.0       # rpm/s noise std on wheel speeds
    transmitter_derate: float = 1.0
    episode_orbits: float = 1.0
    decision_interval_s: float = 60.0

    def __post_init__(self):
        object.__setattr__(self, "initial_battery", _as_ranged(self.initial_battery))
        object.__setattr__(self, "initial_storage", _as_ranged(self.initial_storage))
        object.__setattr__(self, "initial_rw_rpm", _as_ranged(self.initial_rw_rpm))
        if not 0.0 < self.transmitter_derate <= 1.0:
            raise ScenarioError(f"transmitter_derate must be in (0, 1], got {self.transmitter_derate}")
        if self.episode_orbits <= 0 or self.decision_interval_s <= 0:
            raise ScenarioError("episode_orbits and decision_interval_s must be positive")
        if self.disturbance_scale < 0:
            raise ScenarioError("disturbance_scale must be non-negative")
        for fr in (self.initial_battery, self.initial_storage):
            vals = fr if isinstance(fr, tuple) else (fr,)
            for v in vals:
                if not 0.0 <= v <= 1.0:
                    raise ScenarioError(f"initial resource fraction {v} outside [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("initial_battery", "initial_storage", "initial_rw_rpm"):
            if isinstance(d[key], tuple):
                d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        allowed = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - allowed
        if unknown:
            raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
        if "name" not in data:
            raise ScenarioError("scenario config requires a 'name'")
        return cls(**data)


def scenario_preset(name: str) -> ScenarioConfig:
    """The four bundled presets, loaded from the packaged JSON files."""
    if name not in SCENARIO_NAMES:
        raise ScenarioError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")
    return load_scenario(bundled_data_path(f"scenarios/{name}.json"))


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: expected a JSON object")
    return ScenarioConfig.from_dict(data)
