"""Experiment configuration and deterministic seed derivation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from ..errors import InvalidSettings

_SETTINGS = ("so3", "klein", "mixg", "circle")
_METHODS = ("frem", "fnw", "flr")

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One splitmix64 step; the documented mix used for all derived seeds."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix_seed(*parts: int) -> int:
    """Fold integer parts into one 64-bit seed via iterated splitmix64.

    Replicate and subtask seeds all derive from the master seed through this
    function, which is what makes parallel and serial runs agree exactly.
    """
    x = 0
    for p in parts:
        x = _splitmix64(x ^ (int(p) & _MASK64))
    return x


@dataclass
class TuningConfig:
    """Sizes of the tuning grids used by the method pipelines."""

    n_bandwidth_candidates: int = 8
    flr_p_max: int = 20
    k1: int = 10
    k2: int = 20

    def __post_init__(self):
        if self.n_bandwidth_candidates < 1:
            raise InvalidSettings("need at least one bandwidth candidate")
        if self.flr_p_max < 0:
            raise InvalidSettings("flr_p_max must be nonnegative")
        if not (2 <= self.k1 <= self.k2):
            raise InvalidSettings("need 2 <= k1 <= k2")


@dataclass
class SimulationConfig:
    """Full description of one seeded Monte Carlo study."""

    setting: str
    n: int
    replicates: int
    test_size: int
    master_seed: int
    m: int = 100
    snr_x: float = 4.0
    snr_y: float = 2.0
    methods: tuple = _METHODS
    constant_response: bool = False
    tuning: TuningConfig = field(default_factory=TuningConfig)

    def __post_init__(self):
        if self.setting not in _SETTINGS:
            raise InvalidSettings(f"setting must be one of {_SETTINGS}")
        if self.n < 50:
            raise InvalidSettings("need n >= 50")
        if self.replicates < 1:
            raise InvalidSettings("need at least one replicate")
        if self.test_size < 1:
            raise InvalidSettings("need a nonempty test set")
        if self.m < 4:
            raise InvalidSettings("need m >= 4")
        if not (self.snr_x > 0 and self.snr_y > 0):
            raise InvalidSettings("signal-to-noise ratios must be positive")
        self.methods = tuple(self.methods)
        if not self.methods or any(meth not in _METHODS for meth in self.methods):
            raise InvalidSettings(f"methods must be a nonempty subset of {_METHODS}")
        if isinstance(self.tuning, dict):
            self.tuning = _build_tuning(self.tuning)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationConfig":
        if not isinstance(data, dict):
            raise InvalidSettings("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidSettings(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "tuning" in data:
            data["tuning"] = _build_tuning(data["tuning"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise InvalidSettings(str(exc)) from exc


def _build_tuning(data) -> TuningConfig:
    if isinstance(data, TuningConfig):
        return data
    if not isinstance(data, dict):
        raise InvalidSettings("tuning must be an object")
    unknown = set(data) - set(TuningConfig.__dataclass_fields__)
    if unknown:
        raise InvalidSettings(f"unknown tuning keys: {sorted(unknown)}")
    return TuningConfig(**data)


def canonical_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(config: SimulationConfig) -> str:
    return hashlib.sha256(canonical_json(config.to_dict()).encode()).hexdigest()
