"""Transport-weighted alignment loss between a trainable and a frozen feature set."""

from __future__ import annotations

import numpy as np

from sqlab.autodiff import (
    Tensor,
    broadcast_to,
    l2_norm_sq,
    matmul,
    reduce_sum,
    reshape,
    sqrt,
)
from sqlab.exceptions import DimensionError
from sqlab.transport.cost import Metric, TransportPlan


MIN_FEATURE_NORM = 1e-12


def _frozen(features: Tensor | np.ndarray) -> np.ndarray:
    data = features.data if isinstance(features, Tensor) else features
    return np.asarray(data, dtype=np.float64)


def pairwise_distance(t: Tensor, f: Tensor | np.ndarray, metric: Metric = "cosine") -> Tensor:
    """
    Differentiable s x l distance matrix d(t_i, f_j).

    ``f`` is treated as a constant; gradients reach ``t`` only.

    Args:
        t: Trainable token features, shape (s, d_e)
        f: Frozen token features, shape (l, d_e)
        metric: 'euclidean' or 'cosine'

    Returns:
        Tensor of shape (s, l)
    """
    f = _frozen(f)
    if t.ndim != 2 or f.ndim != 2 or t.shape[1] != f.shape[1]:
        raise DimensionError(f"feature sets {t.shape} and {f.shape} do not share a width")
    s, d_e = t.shape
    m = f.shape[0]

    if metric == "euclidean":
        left = broadcast_to(reshape(t, (s, 1, d_e)), (s, m, d_e))
        right = Tensor(np.broadcast_to(f[None, :, :], (s, m, d_e)))
        return sqrt(l2_norm_sq(left - right, axis=2))

    if metric == "cosine":
        norms_sq = l2_norm_sq(t, axis=1)
        f_norms = np.linalg.norm(f, axis=1)
        if np.any(np.sqrt(norms_sq.data) < MIN_FEATURE_NORM) or np.any(f_norms < MIN_FEATURE_NORM):
            raise ValueError("cosine distance is undefined for zero-norm feature rows")
        t_unit = t / broadcast_to(reshape(sqrt(norms_sq), (s, 1)), (s, d_e))
        f_unit = f / f_norms[:, None]
        return 1.0 - matmul(t_unit, Tensor(f_unit.T))

    raise ValueError(f"Unknown metric: {metric}")


def ot_loss(
    t: Tensor,
    f: Tensor | np.ndarray,
    plan: TransportPlan | np.ndarray,
    metric: Metric = "cosine",
) -> Tensor:
    """
    Sum over token pairs of gamma_ij * d(t_i, f_j).

    The plan is a constant: no gradient flows through the solver.

    Args:
        t: Trainable features, shape (s, d_e)
        f: Frozen features, shape (l, d_e)
        plan: Coupling computed on the same metric, shape (s, l)
        metric: Distance used for d

    Returns:
        Scalar loss
    """
    if isinstance(plan, TransportPlan):
        coupling = plan.coupling
    else:
        coupling = np.asarray(plan, dtype=np.float64)
    dist = pairwise_distance(t, f, metric)
    if coupling.shape != dist.shape:
        raise DimensionError(f"plan shape {coupling.shape} does not match distances {dist.shape}")
    return reduce_sum(dist * Tensor(coupling))
