"""
Synthetic datasets for desk-scale GAN experiments.

Every dataset is a deterministic function of (kind, size, seed, shape
parameters): regenerating with the same arguments yields identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator


DatasetKind = Literal["gauss_mixture", "rings", "tiny_raster"]

RASTER_SIDE = 8


class DatasetSpec(BaseModel):
    """
    Description of a synthetic dataset.

    Attributes:
        kind: gauss_mixture, rings or tiny_raster
        size: Number of samples
        seed: Sampling seed
        modes: Mixture components (gauss_mixture)
        radius: Radius of the circle carrying the mixture centers
        std: Per-coordinate noise standard deviation
        ring_radii: Radii of the concentric rings (rings)
    """

    kind: DatasetKind = Field(default="gauss_mixture", description="Dataset family")
    size: int = Field(default=8000, gt=0, description="Number of samples")
    seed: int = Field(default=0, description="Sampling seed")
    modes: int = Field(default=8, gt=0, description="Mixture components")
    radius: float = Field(default=2.0, gt=0, description="Center circle radius")
    std: float = Field(default=0.02, ge=0, description="Noise standard deviation")
    ring_radii: list[float] = Field(default=[1.0, 2.0], min_length=1, description="Ring radii")

    model_config = {"extra": "forbid"}

    @field_validator("ring_radii")
    @classmethod
    def validate_radii(cls, v: list[float]) -> list[float]:
        if any(r <= 0 for r in v):
            raise ValueError(f"ring radii must be positive, got {v}")
        return v

    @property
    def data_dim(self) -> int:
        return RASTER_SIDE * RASTER_SIDE if self.kind == "tiny_raster" else 2

    def build(self) -> Dataset:
        return make_dataset(self.kind, self.size, self.seed, spec=self)


@dataclass
class Dataset:
    """Generated samples with their component labels."""

    spec: DatasetSpec
    samples: np.ndarray
    labels: np.ndarray
    centers: np.ndarray | None = field(default=None)

    @property
    def kind(self) -> DatasetKind:
        return self.spec.kind

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def data_dim(self) -> int:
        return self.samples.shape[1]

    def batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n samples uniformly with replacement."""
        return self.samples[rng.integers(0, self.size, size=n)]


def mixture_centers(modes: int, radius: float) -> np.ndarray:
    """Centers equally spaced on a circle, the first at angle 0."""
    angles = 2.0 * np.pi * np.arange(modes) / modes
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def _balanced_labels(size: int, groups: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.arange(size) % groups)


def _raster_shapes() -> np.ndarray:
    """Eight 8x8 binary glyphs: bars, cross, diagonals, box, block, ring."""
    side = RASTER_SIDE
    shapes = np.zeros((8, side, side))
    shapes[0, 3:5, 1:7] = 1.0  # horizontal bar
    shapes[1, 1:7, 3:5] = 1.0  # vertical bar
    shapes[2, 3:5, 1:7] = 1.0
    shapes[2, 1:7, 3:5] = 1.0  # plus
    idx = np.arange(1, 7)
    shapes[3, idx, idx] = 1.0  # diagonal
    shapes[4, idx, side - 1 - idx] = 1.0  # anti-diagonal
    shapes[5, 1, 1:7] = shapes[5, 6, 1:7] = 1.0
    shapes[5, 1:7, 1] = shapes[5, 1:7, 6] = 1.0  # box outline
    shapes[6, 2:6, 2:6] = 1.0  # filled block
    yy, xx = np.mgrid[0:side, 0:side]
    dist = np.hypot(yy - 3.5, xx - 3.5)
    shapes[7] = ((dist > 1.8) & (dist < 3.2)).astype(np.float64)  # ring
    return shapes


def make_dataset(
    kind: DatasetKind,
    size: int,
    seed: int = 0,
    spec: DatasetSpec | None = None,
    **params: object,
) -> Dataset:
    """
    Generate a synthetic dataset.

    Args:
        kind: gauss_mixture, rings or tiny_raster
        size: Number of samples (> 0)
        seed: Sampling seed
        spec: Full spec; when given its shape parameters are used
        **params: Shape parameters overriding DatasetSpec defaults (modes, radius, std, ring_radii)

    Returns:
        Dataset with samples of shape (size, 2) or (size, 64)

    Raises:
        ValueError: If the kind is unknown or size is not positive
    """
    if kind not in ("gauss_mixture", "rings", "tiny_raster"):
        raise ValueError(f"Unknown dataset kind: {kind}")
    if size <= 0:
        raise ValueError(f"size must be positive, got {size}")
    base = spec.model_dump() if spec is not None else {}
    spec = DatasetSpec(**{**base, **params, "kind": kind, "size": size, "seed": seed})
    rng = np.random.default_rng(seed)

    if kind == "gauss_mixture":
        centers = mixture_centers(spec.modes, spec.radius)
        labels = _balanced_labels(size, spec.modes, rng)
        samples = centers[labels] + spec.std * rng.standard_normal((size, 2))
        return Dataset(spec, samples, labels, centers)

    if kind == "rings":
        radii = np.asarray(spec.ring_radii)
        labels = _balanced_labels(size, len(radii), rng)
        angles = rng.uniform(0.0, 2.0 * np.pi, size)
        r = radii[labels] + spec.std * rng.standard_normal(size)
        samples = np.stack([r * np.cos(angles), r * np.sin(angles)], axis=1)
        return Dataset(spec, samples, labels)

    shapes = _raster_shapes()
    labels = _balanced_labels(size, len(shapes), rng)
    shifts = rng.integers(-1, 2, size=(size, 2))
    images = np.empty((size, RASTER_SIDE, RASTER_SIDE))
    for i, (label, (dy, dx)) in enumerate(zip(labels, shifts)):
        images[i] = np.roll(shapes[label], (dy, dx), axis=(0, 1))
    images += spec.std * rng.standard_normal(images.shape)
    return Dataset(spec, images.reshape(size, -1), labels)
