"""Run configuration: YAML file -> validated, immutable dataclasses.

Unknown keys anywhere in the file are rejected so that typos fail loudly
instead of silently falling back to defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .engine import PhaseConfig
from .experiments import (
    BUILTIN_VALUES,
    DEFAULT_AL_GRID,
    ClassifierThresholds,
    StrategyProfile,
    default_composition,
)
from .nnet import NetworkConfig, TrainingConfigError
from .pgg import ScenarioConfig
from .values import PersonalValues

EXPERIMENTS = ("sweep", "replicate", "compare-rl", "respond")
OUTPUT_DIR_ENV = "PGG_ABM_OUTPUT_DIR"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class SweepParams:
    al_values: tuple = DEFAULT_AL_GRID
    n_agents: int = 10
    self_interest: float = 0.5


@dataclass(frozen=True)
class ReplicateParams:
    profiles: tuple = field(default_factory=lambda: tuple(default_composition()))


@dataclass(frozen=True)
class CompareRLParams:
    values: PersonalValues = BUILTIN_VALUES["conditional_cooperator"]
    n_agents: int = 4
    rl_mode: str = "oracle"
    rl_threshold: float = 0.9999


@dataclass(frozen=True)
class RespondParams:
    values: PersonalValues = PersonalValues()
    oracle: bool = False


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    phases: PhaseConfig = field(default_factory=PhaseConfig)
    classifier: ClassifierThresholds = field(default_factory=ClassifierThresholds)
    sweep: SweepParams = field(default_factory=SweepParams)
    replicate: ReplicateParams = field(default_factory=ReplicateParams)
    compare_rl: CompareRLParams = field(default_factory=CompareRLParams)
    respond: RespondParams = field(default_factory=RespondParams)
    master_seed: int = 0
    output_dir: str = "results"
    threads: int = 1


def _check_keys(section: str, data: Any, allowed) -> dict:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(map(str, unknown))}")
    return dict(data)


def _build(section: str, cls, data: dict):
    try:
        return cls(**data)
    except (TypeError, ValueError, TrainingConfigError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def _field_names(cls):
    return [f.name for f in dataclasses.fields(cls)]


def _values(section: str, data) -> PersonalValues:
    return _build(section, PersonalValues, _check_keys(section, data, ("si", "al", "co", "fa")))


def _profiles(items) -> tuple:
    if not isinstance(items, list) or not items:
        raise ConfigError("replicate.profiles: expected a non-empty list")
    profiles = []
    for i, item in enumerate(items):
        sec = f"replicate.profiles[{i}]"
        item = _check_keys(sec, item, ("label", "count", "values"))
        if "label" not in item or "count" not in item:
            raise ConfigError(f"{sec}: 'label' and 'count' are required")
        label = item["label"]
        if "values" in item:
            values = _values(f"{sec}.values", item["values"])
        elif label in BUILTIN_VALUES:
            values = BUILTIN_VALUES[label]
        else:
            raise ConfigError(f"{sec}.values: required for non built-in label {label!r}")
        profiles.append(_build(sec, StrategyProfile, {"label": label, "values": values,
                                                      "count": item["count"]}))
    return tuple(profiles)


def parse_config(data: Optional[dict]) -> RunConfig:
    top = _check_keys("config", data, _field_names(RunConfig))

    scenario = _build("scenario", ScenarioConfig,
                      _check_keys("scenario", top.get("scenario"), _field_names(ScenarioConfig)))

    phase_raw = _check_keys("phases", top.get("phases"), ("experience_rounds", "lam", "iterations", "network"))
    net_fields = [f for f in _field_names(NetworkConfig) if f != "rng_seed"]
    net = _build("phases.network", NetworkConfig,
                 _check_keys("phases.network", phase_raw.pop("network", None), net_fields))
    phases = _build("phases", PhaseConfig, {**phase_raw, "net_cfg": net})

    cls_raw = _check_keys("classifier", top.get("classifier"), _field_names(ClassifierThresholds))
    if "peak_window" in cls_raw:
        cls_raw["peak_window"] = tuple(cls_raw["peak_window"])
    classifier = _build("classifier", ClassifierThresholds, cls_raw)

    sweep_raw = _check_keys("sweep", top.get("sweep"), _field_names(SweepParams))
    if "al_values" in sweep_raw:
        sweep_raw["al_values"] = tuple(float(a) for a in sweep_raw["al_values"])
    sweep = _build("sweep", SweepParams, sweep_raw)

    rep_raw = _check_keys("replicate", top.get("replicate"), ("profiles",))
    replicate = ReplicateParams(_profiles(rep_raw["profiles"])) if "profiles" in rep_raw else ReplicateParams()

    rl_raw = _check_keys("compare_rl", top.get("compare_rl"), _field_names(CompareRLParams))
    if "values" in rl_raw:
        rl_raw["values"] = _values("compare_rl.values", rl_raw["values"])
    compare_rl = _build("compare_rl", CompareRLParams, rl_raw)
    if compare_rl.rl_mode not in ("oracle", "trained"):
        raise ConfigError(f"compare_rl.rl_mode: must be 'oracle' or 'trained', got {compare_rl.rl_mode!r}")

    resp_raw = _check_keys("respond", top.get("respond"), _field_names(RespondParams))
    if "values" in resp_raw:
        resp_raw["values"] = _values("respond.values", resp_raw["values"])
    respond = _build("respond", RespondParams, resp_raw)

    cfg = RunConfig(scenario, phases, classifier, sweep, replicate, compare_rl, respond,
                    master_seed=top.get("master_seed", 0), output_dir=str(top.get("output_dir", "results")),
                    threads=top.get("threads", 1))
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if not isinstance(cfg.master_seed, int) or isinstance(cfg.master_seed, bool):
        raise ConfigError(f"master_seed: expected an integer, got {cfg.master_seed!r}")
    if not isinstance(cfg.threads, int) or cfg.threads < 1:
        raise ConfigError(f"threads: expected a positive integer, got {cfg.threads!r}")
    if cfg.sweep.n_agents < 1:
        raise ConfigError("sweep.n_agents: must be >= 1")
    for al in cfg.sweep.al_values:
        if not 0.0 <= al <= 1.0:
            raise ConfigError(f"sweep.al_values: {al!r} outside [0, 1]")
    if cfg.compare_rl.n_agents < 2:
        raise ConfigError("compare_rl.n_agents: must be >= 2")
    total = sum(p.count for p in cfg.replicate.profiles)
    if total == 0 or total % cfg.scenario.group_size:
        raise ConfigError(
            f"replicate.profiles: population of {total} is not divisible by group_size {cfg.scenario.group_size}"
        )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    return parse_config(data)


def to_dict(cfg: RunConfig) -> dict:
    """Plain-data view for manifests."""
    return dataclasses.asdict(cfg)
