"""
Desk-scale evaluation metrics.

Mode coverage and kernel MMD measure sample quality in data space; mean cosine
similarity of discriminator features measures embedding diversity.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, Field
from scipy.spatial.distance import cdist, pdist

from sqlab.data.datasets import Dataset
from sqlab.exceptions import DimensionError


logger = logging.getLogger(__name__)

METRICS_COLUMNS = (
    "step",
    "adv_g",
    "adv_d",
    "sq",
    "uniformity",
    "qcr",
    "usage",
    "mode_coverage",
    "kernel_mmd",
    "mean_cos_sim",
)

COVERAGE_RADIUS_STDS = 3.0
MIN_FEATURE_NORM = 1e-12


class MetricsRow(BaseModel):
    """One evaluation record; NaN marks a metric that does not apply to the run."""

    step: int = Field(..., ge=0, description="Training step")
    adv_g: float = Field(default=math.nan, description="Generator adversarial loss")
    adv_d: float = Field(default=math.nan, description="Discriminator adversarial loss")
    sq: float = Field(default=math.nan, description="Style quantization loss")
    uniformity: float = Field(default=math.nan, description="Uniformity loss")
    qcr: float = Field(default=math.nan, description="Quantized consistency penalty")
    usage: float = Field(default=math.nan, description="Fraction of codes in use")
    mode_coverage: float = Field(default=math.nan, description="Fraction of covered modes")
    kernel_mmd: float = Field(default=math.nan, description="Unbiased MMD^2 to real data")
    mean_cos_sim: float = Field(default=math.nan, description="Mean feature cosine similarity")

    def as_record(self) -> dict[str, float | int]:
        return {name: getattr(self, name) for name in METRICS_COLUMNS}


def mode_coverage(
    samples: np.ndarray,
    dataset: Dataset,
    threshold: float = 0.01,
    radius_stds: float = COVERAGE_RADIUS_STDS,
) -> float:
    """
    Fraction of mixture modes that receive at least ``threshold`` of the samples.

    A sample counts toward a mode if it lies within ``radius_stds`` standard
    deviations of that mode's center.

    Args:
        samples: Generated samples, shape (n, 2)
        dataset: gauss_mixture dataset providing centers and std
        threshold: Minimum fraction of samples for a mode to count as covered
        radius_stds: Acceptance radius in units of the mixture std

    Returns:
        Covered modes / total modes

    Raises:
        ValueError: If the dataset is not a Gaussian mixture
    """
    if dataset.kind != "gauss_mixture" or dataset.centers is None:
        raise ValueError(f"mode_coverage needs a gauss_mixture dataset, got {dataset.kind}")
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[1] != dataset.centers.shape[1]:
        raise DimensionError(
            f"samples {samples.shape} do not match centers {dataset.centers.shape}"
        )
    near = cdist(samples, dataset.centers) <= radius_stds * dataset.spec.std
    counts = near.sum(axis=0)
    covered = counts >= threshold * len(samples)
    return float(covered.mean())


def kernel_mmd(generated: np.ndarray, real: np.ndarray, bandwidth: float) -> float:
    """
    Unbiased squared MMD with a Gaussian kernel exp(-||a - b||^2 / (2 h^2)).

    Args:
        generated: Samples, shape (m, d)
        real: Samples, shape (n, d)
        bandwidth: Kernel bandwidth h

    Returns:
        MMD^2 estimate (may be slightly negative)
    """
    x = np.atleast_2d(np.asarray(generated, dtype=np.float64))
    y = np.atleast_2d(np.asarray(real, dtype=np.float64))
    if x.shape[1] != y.shape[1]:
        raise DimensionError(f"sample widths differ: {x.shape} vs {y.shape}")
    m, n = len(x), len(y)
    if m < 2 or n < 2:
        raise ValueError(f"kernel_mmd needs at least two samples per side, got {m} and {n}")
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")

    def kernel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.exp(-cdist(a, b, "sqeuclidean") / (2.0 * bandwidth**2))

    kxx = kernel(x, x)
    kyy = kernel(y, y)
    kxy = kernel(x, y)
    term_x = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    term_y = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    return float(term_x + term_y - 2.0 * kxy.mean())


def mean_cosine_similarity(features: np.ndarray) -> float:
    """
    Mean cosine similarity over unordered pairs of rows.

    Zero-norm rows are excluded and counted in a warning.

    Args:
        features: Array of shape (n, d), n >= 2

    Returns:
        Mean pairwise cosine similarity in [-1, 1]
    """
    feats = np.atleast_2d(np.asarray(features, dtype=np.float64))
    norms = np.linalg.norm(feats, axis=1)
    keep = norms > MIN_FEATURE_NORM
    excluded = int((~keep).sum())
    if excluded:
        logger.warning(f"Excluded {excluded} zero-norm rows from cosine similarity")
    feats = feats[keep]
    if len(feats) < 2:
        raise ValueError(f"need at least two non-zero rows, got {len(feats)}")
    return float(np.mean(1.0 - pdist(feats, "cosine")))
