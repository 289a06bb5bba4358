"""Experiment configuration: TOML file loading with strict key checking.

Recognized sections are ``plant``, ``controller``, ``policy``, ``schedule``,
``io``, and optionally ``haptics``; keys map one-to-one onto the parameter
dataclasses. Unknown sections or keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .arbiter import Group
from .autonomy import ControllerParams
from .haptics import VibrationParams
from .harness import Schedule
from .plant import PlantParams
from .policies import PolicyParams


class ConfigError(Exception):
    pass


TOP_LEVEL_KEYS = {"group", "seed", "n_sessions"}
SECTIONS = {
    "plant": PlantParams,
    "controller": ControllerParams,
    "policy": PolicyParams,
    "schedule": Schedule,
    "haptics": VibrationParams,
}
IO_KEYS = {"out_dir", "host", "port", "speed", "write_telemetry"}

GROUP_ALIASES = {
    "standard": Group.STANDARD,
    "vibro": Group.VIBROTACTILE,
    "vibrotactile": Group.VIBROTACTILE,
    "shared": Group.SHARED,
}


@dataclass
class ExperimentConfig:
    group: Group = Group.SHARED
    seed: int = 0
    n_sessions: int = 1
    plant: PlantParams = field(default_factory=PlantParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    vibration: VibrationParams = field(default_factory=VibrationParams)
    policy: PolicyParams = field(default_factory=PolicyParams)
    schedule: Schedule = field(default_factory=Schedule)
    out_dir: str = "results"
    host: str = "127.0.0.1"
    port: int = 8765
    speed: float = 1.0
    write_telemetry: bool = True

    def __post_init__(self):
        if self.n_sessions < 1:
            raise ConfigError("n_sessions must be >= 1")
        if self.speed <= 0:
            raise ConfigError("speed must be positive")


def _build_section(cls, data: dict, section: str):
    valid = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - valid
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    try:
        return cls(**data)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [{section}] config: {exc}") from exc


def parse_group(name: str) -> Group:
    try:
        return GROUP_ALIASES[name.lower()]
    except KeyError:
        raise ConfigError(
            f"unknown group {name!r}; expected one of {sorted(GROUP_ALIASES)}"
        ) from None


def from_mapping(data: dict) -> ExperimentConfig:
    data = dict(data)
    known = TOP_LEVEL_KEYS | set(SECTIONS) | {"io"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    group = parse_group(data.get("group", "shared")) if isinstance(data.get("group", "shared"), str) else data["group"]
    seed = int(data.get("seed", 0))
    n_sessions = int(data.get("n_sessions", 1))

    plant = _build_section(PlantParams, data.get("plant", {}), "plant")
    controller = _build_section(ControllerParams, data.get("controller", {}), "controller")
    vibration = _build_section(VibrationParams, data.get("haptics", {}), "haptics")
    schedule = _build_section(Schedule, data.get("schedule", {}), "schedule")

    policy_data = dict(data.get("policy", {}))
    policy_data.setdefault("uses_feedback", group is not Group.STANDARD)
    policy_data.setdefault("seed", seed)
    policy = _build_section(PolicyParams, policy_data, "policy")

    io = dict(data.get("io", {}))
    unknown_io = set(io) - IO_KEYS
    if unknown_io:
        raise ConfigError(f"unknown keys in [io]: {sorted(unknown_io)}")

    try:
        return ExperimentConfig(
            group=group,
            seed=seed,
            n_sessions=n_sessions,
            plant=plant,
            controller=controller,
            vibration=vibration,
            policy=policy,
            schedule=schedule,
            out_dir=str(io.get("out_dir", "results")),
            host=str(io.get("host", "127.0.0.1")),
            port=int(io.get("port", 8765)),
            speed=float(io.get("speed", 1.0)),
            write_telemetry=bool(io.get("write_telemetry", True)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    return from_mapping(data)
