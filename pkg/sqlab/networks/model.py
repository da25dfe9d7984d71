"""
Desk-scale GAN: mapping network, synthesis network, discriminator and codebook.

The pipeline is z -> f_W -> (quantize) -> g -> f_D. The quantized proxy vector
enters the generator once, as a plain input vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field, model_validator

from sqlab.autodiff import Tensor, reshape
from sqlab.exceptions import DimensionError
from sqlab.networks.mlp import MLP, MLPSpec
from sqlab.quantizer.codebook import Codebook


class ModelDims(BaseModel):
    """Latent, style and data widths."""

    d_z: int = Field(default=16, gt=0, description="Prior latent width")
    d_w: int = Field(default=16, gt=0, description="Style vector width")
    s: int = Field(default=4, gt=0, description="Sub-vectors per style vector")
    data_dim: int = Field(default=2, gt=0, description="Sample width")

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def check_divisible(self) -> ModelDims:
        if self.d_w % self.s != 0:
            raise ValueError(f"d_w={self.d_w} is not divisible by s={self.s}")
        return self

    @property
    def d_c(self) -> int:
        return self.d_w // self.s


@dataclass
class GanModel:
    """All trainable state of one experiment."""

    mapper: MLP
    generator: MLP
    discriminator: MLP
    codebook: Codebook
    dims: ModelDims

    def __post_init__(self) -> None:
        d = self.dims
        checks = [
            ("mapper input", self.mapper.spec.d_in, d.d_z),
            ("mapper output", self.mapper.spec.d_out, d.d_w),
            ("generator input", self.generator.spec.d_in, d.d_w),
            ("generator output", self.generator.spec.d_out, d.data_dim),
            ("discriminator input", self.discriminator.spec.d_in, d.data_dim),
            ("discriminator output", self.discriminator.spec.d_out, 1),
            ("code width", self.codebook.d_c, d.d_c),
        ]
        for label, actual, expected in checks:
            if actual != expected:
                raise DimensionError(f"{label} is {actual}, expected {expected}")

    @classmethod
    def build(
        cls,
        dims: ModelDims,
        mapper_spec: MLPSpec,
        generator_spec: MLPSpec,
        discriminator_spec: MLPSpec,
        codebook: Codebook,
    ) -> GanModel:
        return cls(
            mapper=MLP(mapper_spec, name="mapper"),
            generator=MLP(generator_spec, name="generator"),
            discriminator=MLP(discriminator_spec, name="discriminator"),
            codebook=codebook,
            dims=dims,
        )

    def parameters(self, group: str | None = None) -> dict[str, Tensor]:
        """
        Named parameters, optionally restricted to one group.

        Args:
            group: 'mapper', 'generator', 'discriminator' or 'codebook'

        Returns:
            Mapping of parameter name to tensor
        """
        groups = {
            "mapper": self.mapper.parameters(),
            "generator": self.generator.parameters(),
            "discriminator": self.discriminator.parameters(),
            "codebook": self.codebook.parameters(),
        }
        if group is not None:
            if group not in groups:
                raise ValueError(f"Unknown parameter group: {group}")
            return groups[group]
        return {name: p for params in groups.values() for name, p in params.items()}

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Copies of every parameter, keyed by name."""
        return {name: p.data.copy() for name, p in self.parameters().items()}

    def load_state_arrays(self, state: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = set(params) - set(state)
        if missing:
            raise DimensionError(f"state is missing parameters: {sorted(missing)}")
        for name, p in params.items():
            if state[name].shape != p.shape:
                raise DimensionError(
                    f"parameter {name}: stored shape {state[name].shape}, model shape {p.shape}"
                )
            p.data = np.array(state[name], dtype=np.float64)


def _as_batch(x: Tensor | np.ndarray, width: int, label: str) -> Tensor:
    t = x if isinstance(x, Tensor) else Tensor(x)
    if t.ndim != 2 or t.shape[1] != width:
        raise DimensionError(f"{label}: expected (n, {width}), got {t.shape}")
    return t


def map_style(z: Tensor | np.ndarray, model: GanModel) -> Tensor:
    """w = f_W(z), shape (n, d_w)."""
    return model.mapper(_as_batch(z, model.dims.d_z, "map_style"))


def generate(wq: Tensor | np.ndarray, model: GanModel) -> Tensor:
    """x = g(w^q), shape (n, data_dim)."""
    return model.generator(_as_batch(wq, model.dims.d_w, "generate"))


def discriminate(x: Tensor | np.ndarray, model: GanModel) -> Tensor:
    """Raw logits f_D(x), shape (n,)."""
    logits = model.discriminator(_as_batch(x, model.dims.data_dim, "discriminate"))
    return reshape(logits, (logits.shape[0],))


def discriminator_features(x: Tensor | np.ndarray, model: GanModel) -> Tensor:
    """Penultimate-layer discriminator activations."""
    _, hidden = model.discriminator.forward(
        _as_batch(x, model.dims.data_dim, "discriminator_features"), return_hidden=True
    )
    return hidden
