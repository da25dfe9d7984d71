"""
Configuration file loaders.

A config is a single structured text file whose nested sections mirror the
TrainConfig field names. TOML and JSON are supported; the loader is picked by
file suffix.
"""

import json
import logging
import tomllib
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from sqlab.config.schema import TrainConfig
from sqlab.exceptions import ConfigError


logger = logging.getLogger(__name__)


class BaseConfigLoader(ABC):
    """Abstract base class for config loaders."""

    suffixes: tuple[str, ...] = ()

    @abstractmethod
    def read(self, source: str | Path) -> dict[str, Any]:
        """
        Read raw nested sections from a file.

        Args:
            source: Path to the config file

        Returns:
            Nested dictionary of sections

        Raises:
            ConfigError: If the file cannot be parsed
        """

    def validate(self, source: str | Path) -> bool:
        """Check whether this loader handles the given file."""
        return Path(source).suffix.lower() in self.suffixes

    def load(self, source: str | Path) -> TrainConfig:
        """
        Read and validate a config file.

        Args:
            source: Path to the config file

        Returns:
            Validated TrainConfig

        Raises:
            ConfigError: On unreadable files, unknown keys or inconsistent settings
        """
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"Config not found: {path}")
        return config_from_dict(self.read(path), origin=str(path))


class TomlConfigLoader(BaseConfigLoader):
    suffixes = (".toml",)

    def read(self, source: str | Path) -> dict[str, Any]:
        try:
            with open(source, "rb") as f:
                return tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{source}: invalid TOML: {e}") from e


class JsonConfigLoader(BaseConfigLoader):
    suffixes = (".json",)

    def read(self, source: str | Path) -> dict[str, Any]:
        try:
            with open(source, encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{source}: invalid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be an object")
        return data


LOADERS: tuple[BaseConfigLoader, ...] = (TomlConfigLoader(), JsonConfigLoader())


def _describe(error: ValidationError) -> str:
    parts = []
    for err in error.errors():
        location = ".".join(str(p) for p in err["loc"]) or "<root>"
        if err["type"] == "extra_forbidden":
            parts.append(f"unknown key '{location}'")
        else:
            parts.append(f"{location}: {err['msg']}")
    return "; ".join(parts)


def config_from_dict(data: dict[str, Any], origin: str = "<dict>") -> TrainConfig:
    """Validate nested sections into a TrainConfig, raising ConfigError on failure."""
    try:
        return TrainConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{origin}: {_describe(e)}") from e


def load_config(source: str | Path) -> TrainConfig:
    """
    Load a config, choosing the loader by suffix.

    Args:
        source: Path to a .toml or .json file

    Returns:
        Validated TrainConfig
    """
    for loader in LOADERS:
        if loader.validate(source):
            config = loader.load(source)
            logger.info(f"Loaded {config.mode.value} config from {source}")
            return config
    raise ConfigError(f"Unsupported config format: {Path(source).suffix or '<none>'}")
