"""Configuration package for training, swarm and experiment parameters."""

from .experiment_config import (
    CgConfig,
    DataConfig,
    ExperimentConfig,
    ModelConfig,
    SwarmConfig,
    SyntheticConfig,
    TrainConfig,
)
from .loader import load_config_file, parse_assignment, resolve_config

__all__ = [
    "CgConfig",
    "DataConfig",
    "ExperimentConfig",
    "ModelConfig",
    "SwarmConfig",
    "SyntheticConfig",
    "TrainConfig",
    "load_config_file",
    "parse_assignment",
    "resolve_config",
]
