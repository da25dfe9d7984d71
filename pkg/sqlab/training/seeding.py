"""Named, independent random streams derived from one run seed."""

import numpy as np


# Order is fixed: appending a name never changes the streams listed before it.
STREAM_NAMES = (
    "mapper",
    "generator",
    "discriminator",
    "codebook",
    "embedder",
    "provider",
    "data",
    "latent",
    "perturbation",
    "cbi",
    "eval",
)


class SeedStreams:
    """Spawns one child SeedSequence per named stream."""

    def __init__(self, seed: int) -> None:
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
        self._sequences = dict(zip(STREAM_NAMES, children))

    def generator(self, name: str) -> np.random.Generator:
        """A fresh Generator for ``name``; repeated calls restart the stream."""
        if name not in self._sequences:
            raise KeyError(f"Unknown random stream: {name}")
        return np.random.default_rng(self._sequences[name])

    def int_seed(self, name: str) -> int:
        """A 32-bit integer seed for components that take plain ints."""
        return int(self.generator(name).integers(0, 2**31 - 1))
