"""Quantization losses and codebook usage statistics."""

from collections.abc import Iterable

import numpy as np

from sqlab.autodiff import (
    Tensor,
    broadcast_to,
    exp,
    l2_norm_sq,
    log,
    matmul,
    reduce_sum,
    reshape,
    sqrt,
    stop_gradient,
    transpose,
)
from sqlab.exceptions import DegenerateProjectionError
from sqlab.quantizer.codebook import Codebook, QuantizedStyle


DEFAULT_BETA = 0.25
MIN_PROJECTED_NORM = 1e-12


def sq_loss_terms(q: QuantizedStyle) -> tuple[Tensor, Tensor]:
    """
    Return the two halves of the style quantization loss.

    The first term, ||sg(w_hat) - c||^2, only moves the codes; the second,
    ||w_hat - sg(c)||^2, only moves the style vectors. Both are summed over
    sub-vectors and averaged over the batch.

    Args:
        q: Quantized batch

    Returns:
        Tuple of (codebook_term, commitment_term)
    """
    n = float(q.batch_size)
    codebook_term = reduce_sum(l2_norm_sq(stop_gradient(q.sub_vectors) - q.quantized_subs)) / n
    commitment_term = reduce_sum(l2_norm_sq(q.sub_vectors - stop_gradient(q.quantized_subs))) / n
    return codebook_term, commitment_term


def sq_loss(q: QuantizedStyle, beta: float = DEFAULT_BETA) -> Tensor:
    """
    Style quantization loss with commitment weight beta.

    Args:
        q: Quantized batch
        beta: Commitment weight (>= 0)

    Returns:
        Scalar loss
    """
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    codebook_term, commitment_term = sq_loss_terms(q)
    return codebook_term + beta * commitment_term


def projected_codes(codebook: Codebook) -> Tensor:
    """Differentiable c_bar = P c / ||P c||, one row per code."""
    projected = matmul(codebook.codes, transpose(codebook.projection))
    norms_sq = l2_norm_sq(projected, axis=1)
    small = np.flatnonzero(np.sqrt(norms_sq.data) < MIN_PROJECTED_NORM)
    if len(small):
        row = int(small[0])
        raise DegenerateProjectionError(row, float(np.sqrt(norms_sq.data[row])))
    k, d_p = projected.shape
    norms = broadcast_to(reshape(sqrt(norms_sq), (k, 1)), (k, d_p))
    return projected / norms


def uniformity_loss(codebook: Codebook) -> Tensor:
    """
    Log of the mean RBF potential between distinct projected codes.

    The mean runs over ordered pairs i != j of exp(-t ||c_bar_i - c_bar_j||^2).

    Args:
        codebook: Codebook with k >= 2

    Returns:
        Scalar loss in [-4t, 0]
    """
    k = codebook.k
    if k < 2:
        raise ValueError(f"uniformity loss needs at least two codes, got k={k}")
    unit = projected_codes(codebook)
    d_p = unit.shape[1]
    left = broadcast_to(reshape(unit, (k, 1, d_p)), (k, k, d_p))
    right = broadcast_to(reshape(unit, (1, k, d_p)), (k, k, d_p))
    dist_sq = l2_norm_sq(left - right, axis=2)
    kernel = exp(-codebook.rbf_scale * dist_sq)
    off_diagonal = Tensor(1.0 - np.eye(k))
    return log(reduce_sum(kernel * off_diagonal) / float(k * (k - 1)))


def _collect_indices(history: QuantizedStyle | Iterable[QuantizedStyle] | np.ndarray) -> np.ndarray:
    if isinstance(history, np.ndarray):
        return history.reshape(-1)
    if isinstance(history, QuantizedStyle):
        return history.indices.reshape(-1)
    parts = [q.indices.reshape(-1) for q in history]
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def usage(history: QuantizedStyle | Iterable[QuantizedStyle] | np.ndarray, k: int) -> float:
    """
    Fraction of codebook entries selected at least once.

    Args:
        history: Quantized records (or raw index arrays)
        k: Codebook size

    Returns:
        |distinct indices| / k
    """
    indices = _collect_indices(history)
    if indices.size == 0:
        raise ValueError("usage needs a non-empty history")
    return len(np.unique(indices)) / k


def usage_histogram(
    history: QuantizedStyle | Iterable[QuantizedStyle] | np.ndarray, k: int
) -> np.ndarray:
    """Selection count per codebook entry."""
    return np.bincount(_collect_indices(history).astype(np.int64), minlength=k)
