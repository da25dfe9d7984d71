"""Optimizer, seed streams and per-step objectives for adversarial training."""

from sqlab.training.optim import Adam
from sqlab.training.seeding import STREAM_NAMES, SeedStreams
from sqlab.training.steps import (
    discriminator_objective,
    generator_input,
    generator_objective,
    sample,
)


__all__ = [
    "STREAM_NAMES",
    "Adam",
    "SeedStreams",
    "discriminator_objective",
    "generator_input",
    "generator_objective",
    "sample",
]
