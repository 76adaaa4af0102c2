"""Experiment configuration files (JSON).

Schema::

    {
      "instance": "setting2" | {"name": ..., "arms": [{"mean": ..., "sigma": ...,
                                 "eps": ..., "corruption": {"kind": ...}, ...}]},
      "policies": ["crimed", {"name": "med_ucb", "alpha": 2.0}, ...],
      "horizon": 10000,
      "reps": 100,
      "master_seed": 0,
      "checkpoints": null | [int, ...],
      "output": "results"
    }

Only ``instance`` is required.  Unknown fields are rejected by name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .environments import SETTING_HORIZON, BanditInstance, instance_from_dict, instance_to_dict, preset_instance
from .errors import ConfigError
from .policies import normalise_descriptor

DEFAULT_POLICIES = ("crimed", "crimed_star", "imed", "med_ucb")
MISSPEC_POLICIES = ("crimed_m", "crimed_star_m", "imed", "med_ucb")
_FIELDS = ("instance", "policies", "horizon", "reps", "master_seed", "checkpoints", "output")


def default_policies(instance_spec) -> list:
    if instance_spec in ("setting4", "setting5"):
        return list(MISSPEC_POLICIES)
    return list(DEFAULT_POLICIES)


@dataclass
class ExperimentConfig:
    instance: str | dict
    policies: list = field(default_factory=list)
    horizon: int = SETTING_HORIZON
    reps: int = 100
    master_seed: int = 0
    checkpoints: list[int] | None = None
    output: str = "results"

    def __post_init__(self):
        if not self.policies:
            self.policies = default_policies(self.instance)
        self.policies = [normalise_descriptor(p) for p in self.policies]
        names = [p["name"] for p in self.policies]
        if len(set(names)) != len(names):
            raise ConfigError("policies: each policy name may appear only once")
        for name in ("horizon", "reps", "master_seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{name}: expected an integer, got {value!r}")
        if self.horizon < 3:
            raise ConfigError("horizon: must be at least 3")
        if self.reps < 1:
            raise ConfigError("reps: must be at least 1")
        if self.checkpoints is not None:
            if not isinstance(self.checkpoints, list) or not all(
                isinstance(c, int) and 1 <= c <= self.horizon for c in self.checkpoints
            ):
                raise ConfigError(f"checkpoints: expected integers in [1, {self.horizon}]")
        self.build_instance()

    def build_instance(self) -> BanditInstance:
        if isinstance(self.instance, str):
            return preset_instance(self.instance)
        return instance_from_dict(self.instance)

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "policies": [dict(p) for p in self.policies],
            "horizon": self.horizon,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "checkpoints": None if self.checkpoints is None else list(self.checkpoints),
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        if not isinstance(d, dict):
            raise ConfigError("top level: expected a JSON object")
        for key in d:
            if key not in _FIELDS:
                raise ConfigError(f"unknown field {key!r}")
        if "instance" not in d:
            raise ConfigError("missing field 'instance'")
        return cls(**d)

    @classmethod
    def for_preset(cls, name: str, **overrides) -> ExperimentConfig:
        return cls(instance=name, **overrides)


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return ExperimentConfig.from_dict(data)


def dump_config(config: ExperimentConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True)


def inline_instance(instance: BanditInstance) -> dict:
    return instance_to_dict(instance)
