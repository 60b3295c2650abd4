"""Run configuration: nested dataclasses, TOML loading, presets.

A run is reproducible from (config, seed): every random stream is derived
from the single seed, and the config snapshot is written into the run
directory.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .search import SearchConfig

DATA_DIR_ENV = "XQLAB_DATA_DIR"

# Learning-rate phase list at full scale; training time is split into equal
# phases, one rate each.
FULL_SCALE_LEARNING_RATES = [0.03, 0.01, 0.003, 0.001, 0.0003, 0.0001,
                             0.0003, 0.001, 0.003, 0.01]


@dataclass
class ModelConfig:
    filters: int = 32
    blocks: int = 0


@dataclass
class TrainConfig:
    batch_size: int = 128
    alpha: float = 1.0          # policy loss weight
    beta: float = 1e-4          # L2 weight
    optimizer: str = "adam"
    learning_rates: list[float] = field(default_factory=lambda: [0.01])
    momentum: float = 0.9
    steps_per_game: int = 8
    saver_step: int = 400
    replay_capacity: int = 60_000
    min_replay_fill: int = 256


@dataclass
class PopulationConfig:
    capacity: int = 5
    top_n: int = 5
    games_per_rotation: int = 200
    eval_games_per_pair: int = 2
    eval_simulations: int = 24
    normalize_payoff: bool = True


@dataclass
class ServiceConfig:
    session_ttl_seconds: float = 3600.0
    default_simulations: int = 160
    host: str = "127.0.0.1"
    port: int = 8000


@dataclass
class AnalysisConfig:
    bin_width: float = 50.0
    payoff_mode: str = "midpoint"
    elo_k_factor: float = 32.0
    z_score_cutoff: float = 2.5


@dataclass
class RunConfig:
    seed: int = 0
    workers: int = 1
    torch_threads: int = 1
    data_dir: str = "runs"
    selfplay_max_plies: int = 240
    search: SearchConfig = field(default_factory=SearchConfig)
    selfplay_noise_fraction: float = 0.25
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    population: PopulationConfig = field(default_factory=PopulationConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    def resolve_data_dir(self) -> Path:
        return Path(os.environ.get(DATA_DIR_ENV, self.data_dir))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def tiny_preset() -> RunConfig:
    """Laptop-CPU scale: everything in the test suite runs on one core."""
    cfg = RunConfig()
    cfg.search = SearchConfig(simulations=160, c_puct=1.5,
                              root_dirichlet_alpha=0.2,
                              temperature_cutoff_ply=20)
    cfg.model = ModelConfig(filters=32, blocks=0)
    cfg.population = PopulationConfig(capacity=5, top_n=5, games_per_rotation=25,
                                      eval_games_per_pair=2, eval_simulations=24)
    cfg.train.learning_rates = [0.01]
    return cfg


def full_preset() -> RunConfig:
    """Published-scale hyperparameters; far beyond desk hardware."""
    cfg = RunConfig()
    cfg.search = SearchConfig(simulations=800, c_puct=1.5,
                              root_dirichlet_alpha=0.2,
                              temperature_cutoff_ply=20)
    cfg.selfplay_max_plies = 400
    cfg.model = ModelConfig(filters=192, blocks=4)
    cfg.train = TrainConfig(batch_size=2048, saver_step=400,
                            learning_rates=list(FULL_SCALE_LEARNING_RATES),
                            optimizer="sgd", replay_capacity=1_000_000)
    cfg.population = PopulationConfig(capacity=21, top_n=5, games_per_rotation=500,
                                      eval_games_per_pair=2, eval_simulations=100)
    return cfg


PRESETS = {"tiny": tiny_preset, "full": full_preset}


def _apply_section(obj: Any, section: dict, path: str) -> None:
    for key, value in section.items():
        if not hasattr(obj, key):
            raise ValueError(f"unknown config key: {path}{key}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current) and isinstance(value, dict):
            _apply_section(current, value, f"{path}{key}.")
        else:
            if isinstance(current, bool) and not isinstance(value, bool):
                raise ValueError(f"config key {path}{key} expects a boolean")
            if isinstance(current, (int, float)) and not isinstance(value, (int, float)):
                raise ValueError(f"config key {path}{key} expects a number")
            setattr(obj, key, value)


def load_config(path: str | Path | None = None, preset: str = "tiny",
                overrides: list[str] | None = None) -> RunConfig:
    """Build a config from a preset, an optional TOML file, and key=value overrides."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    cfg = PRESETS[preset]()
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        _apply_section(cfg, data, "")
    for item in overrides or []:
        if "=" not in item:
            raise ValueError(f"override {item!r} must look like section.key=value")
        dotted, raw = item.split("=", 1)
        target = cfg
        *parents, leaf = dotted.split(".")
        for part in parents:
            if not hasattr(target, part):
                raise ValueError(f"unknown config key: {dotted}")
            target = getattr(target, part)
        if not hasattr(target, leaf):
            raise ValueError(f"unknown config key: {dotted}")
        current = getattr(target, leaf)
        value: Any
        if isinstance(current, bool):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            value = int(raw)
        elif isinstance(current, float):
            value = float(raw)
        elif isinstance(current, list):
            value = [float(x) for x in raw.split(",")]
        else:
            value = raw
        setattr(target, leaf, value)
    return cfg
