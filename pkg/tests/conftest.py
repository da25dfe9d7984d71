"""Pytest configuration and fixtures."""

from collections.abc import Callable
from pathlib import Path
from typing import Any

import matplotlib


matplotlib.use("Agg")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from sqlab.config import CBISettings, ProviderSettings, TrainConfig  # noqa: E402
from sqlab.data import Dataset, make_dataset  # noqa: E402
from sqlab.networks import GanModel, MLPSpec, ModelDims  # noqa: E402
from sqlab.quantizer import Codebook  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for test data."""
    return np.random.default_rng(42)


@pytest.fixture
def small_dims() -> ModelDims:
    """Four-wide style vectors cut into two slots."""
    return ModelDims(d_z=4, d_w=4, s=2, data_dim=2)


@pytest.fixture
def small_codebook(rng: np.random.Generator) -> Codebook:
    """Eight codes of width two."""
    return Codebook.random(8, 2, rng)


@pytest.fixture
def small_model(small_dims: ModelDims, small_codebook: Codebook) -> GanModel:
    """Tiny GAN with an eight-entry codebook."""
    return GanModel.build(
        small_dims,
        MLPSpec.stack(small_dims.d_z, 8, small_dims.d_w, depth=2, seed=1),
        MLPSpec.stack(small_dims.d_w, 8, small_dims.data_dim, depth=2, seed=2),
        MLPSpec.stack(small_dims.data_dim, 8, 1, depth=2, seed=3),
        small_codebook,
    )


@pytest.fixture
def gauss_dataset() -> Dataset:
    """Eight-mode mixture with 400 samples."""
    return make_dataset("gauss_mixture", 400, seed=0)


@pytest.fixture
def tiny_cbi_settings() -> CBISettings:
    """Short codebook initialization schedule."""
    return CBISettings(
        steps=5,
        batch_size=4,
        code_batch_size=4,
        embedder_hidden=8,
        provider=ProviderSettings(d_e=4, tokens=3, hidden=8),
    )


@pytest.fixture
def make_config(tmp_path: Path, tiny_cbi_settings: CBISettings) -> Callable[..., TrainConfig]:
    """Factory for fast configs writing under tmp_path."""

    def factory(mode: str = "sq_gan", name: str | None = None, **overrides: Any) -> TrainConfig:
        data: dict[str, Any] = {
            "mode": mode,
            "seed": 0,
            "output_dir": tmp_path / (name or mode),
            "progress": False,
            "model": {"d_z": 4, "d_w": 4, "s": 2, "data_dim": 2},
            "networks": {
                "mapper_hidden": 8,
                "mapper_depth": 2,
                "generator_hidden": 8,
                "generator_depth": 2,
                "discriminator_hidden": 8,
                "discriminator_depth": 2,
            },
            "codebook": {"k": 8},
            "optimizer": {"steps": 6, "batch_size": 8, "lr_g": 1e-3, "lr_d": 1e-3},
            "eval": {"interval": 3, "samples": 32},
            "dataset": {"kind": "gauss_mixture", "size": 200},
        }
        if mode == "sq_gan_cbi":
            data["cbi"] = tiny_cbi_settings.model_dump()
        data.update(overrides)
        return TrainConfig.model_validate(data)

    return factory
