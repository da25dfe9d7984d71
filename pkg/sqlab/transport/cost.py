"""Cost matrices, marginals and transport plans."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.spatial.distance import cdist

from sqlab.exceptions import DimensionError, InvalidMarginalError


Metric = Literal["euclidean", "cosine"]

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class CostMatrix:
    """Nonnegative n x m transport cost and the metric that produced it."""

    values: np.ndarray
    metric: Metric = "euclidean"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or 0 in values.shape:
            raise DimensionError(f"cost matrix must be a non-empty 2-D array, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("cost matrix has non-finite entries")
        if np.any(values < 0):
            raise ValueError("cost matrix has negative entries")
        if self.metric == "cosine" and np.any(values > 2.0):
            raise ValueError("cosine distances must lie in [0, 2]")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    def normalized(self) -> CostMatrix:
        """Scale so the largest entry is 1 (no-op for an all-zero matrix)."""
        peak = float(self.values.max())
        if peak == 0.0:
            return self
        return CostMatrix(self.values / peak, self.metric)


def as_cost(cost: CostMatrix | np.ndarray) -> CostMatrix:
    return cost if isinstance(cost, CostMatrix) else CostMatrix(np.asarray(cost, dtype=np.float64))


def pairwise_cost(a: np.ndarray, b: np.ndarray, metric: Metric = "euclidean") -> CostMatrix:
    """
    Cost matrix between the rows of two feature arrays.

    Args:
        a: Features, shape (n, d)
        b: Features, shape (m, d)
        metric: 'euclidean' or 'cosine' (cosine distance, 1 - cos)

    Returns:
        CostMatrix of shape (n, m)
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"feature widths differ: {a.shape} vs {b.shape}")
    if metric == "euclidean":
        values = cdist(a, b, "euclidean")
    elif metric == "cosine":
        values = np.clip(cdist(a, b, "cosine"), 0.0, 2.0)
    else:
        raise ValueError(f"Unknown metric: {metric}")
    return CostMatrix(values, metric)


def uniform_marginal(n: int) -> np.ndarray:
    """The uniform distribution on n points."""
    return np.full(n, 1.0 / n)


def check_marginals(
    p: np.ndarray, q: np.ndarray, shape: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    """Validate that p and q are simplex vectors matching the cost shape."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != (shape[0],) or q.shape != (shape[1],):
        raise DimensionError(f"marginals {p.shape}, {q.shape} do not match cost shape {shape}")
    for name, vec in (("p", p), ("q", q)):
        if np.any(vec < 0) or abs(vec.sum() - 1.0) > SIMPLEX_TOL:
            raise InvalidMarginalError(f"marginal {name} is not on the simplex (sum={vec.sum()!r})")
    return p, q


@dataclass(frozen=True)
class TransportPlan:
    """Nonnegative coupling with its prescribed marginals."""

    coupling: np.ndarray
    p: np.ndarray
    q: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.coupling.shape  # type: ignore[return-value]

    def marginal_error(self) -> float:
        """Largest absolute deviation of row or column sums from p, q."""
        rows = np.abs(self.coupling.sum(axis=1) - self.p).max()
        cols = np.abs(self.coupling.sum(axis=0) - self.q).max()
        return float(max(rows, cols))

    def cost(self, cost: CostMatrix | np.ndarray) -> float:
        """Frobenius product <gamma, C>."""
        return float(np.sum(self.coupling * as_cost(cost).values))
