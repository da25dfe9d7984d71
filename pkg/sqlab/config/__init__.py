"""Experiment configuration models and loaders."""

from sqlab.config.loaders import (
    BaseConfigLoader,
    JsonConfigLoader,
    TomlConfigLoader,
    config_from_dict,
    load_config,
)
from sqlab.config.schema import (
    CBISettings,
    CheckpointSettings,
    CodebookSettings,
    EvalSettings,
    Mode,
    NetworkSettings,
    OptimizerSettings,
    ProviderSettings,
    TrainConfig,
)


__all__ = [
    "BaseConfigLoader",
    "CBISettings",
    "CheckpointSettings",
    "CodebookSettings",
    "EvalSettings",
    "JsonConfigLoader",
    "Mode",
    "NetworkSettings",
    "OptimizerSettings",
    "ProviderSettings",
    "TomlConfigLoader",
    "TrainConfig",
    "config_from_dict",
    "load_config",
]
