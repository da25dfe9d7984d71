"""Sample-quality and diversity metrics."""

from sqlab.evaluation.metrics import (
    METRICS_COLUMNS,
    MetricsRow,
    kernel_mmd,
    mean_cosine_similarity,
    mode_coverage,
)


__all__ = [
    "METRICS_COLUMNS",
    "MetricsRow",
    "kernel_mmd",
    "mean_cosine_similarity",
    "mode_coverage",
]
