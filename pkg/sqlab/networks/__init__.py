"""Mapping, synthesis and discriminator networks."""

from sqlab.networks.mlp import MLP, MLPSpec
from sqlab.networks.model import (
    GanModel,
    ModelDims,
    discriminate,
    discriminator_features,
    generate,
    map_style,
)


__all__ = [
    "MLP",
    "GanModel",
    "MLPSpec",
    "ModelDims",
    "discriminate",
    "discriminator_features",
    "generate",
    "map_style",
]
