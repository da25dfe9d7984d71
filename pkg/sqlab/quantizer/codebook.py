"""
Style-space quantization against a learnable codebook.

A style vector w of width d_w is cut into s contiguous sub-vectors of width
d_c = d_w / s. Each sub-vector snaps to its nearest codebook row (lowest index
wins ties) and the snapped rows are concatenated back into the proxy vector.
One codebook is shared by all s slots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from sqlab.autodiff import Tensor, reshape, stop_gradient, straight_through, take_rows
from sqlab.exceptions import DimensionError


DEFAULT_RBF_SCALE = 2.0


class Codebook:
    """Learnable k x d_c code matrix plus the hyperspherical projection P."""

    def __init__(
        self,
        codes: np.ndarray,
        projection: np.ndarray | None = None,
        rbf_scale: float = DEFAULT_RBF_SCALE,
    ) -> None:
        """
        Initialize codebook.

        Args:
            codes: Code matrix of shape (k, d_c)
            projection: Projection matrix of shape (d_p, d_c); identity when omitted
            rbf_scale: Fixed scale t of the uniformity kernel
        """
        codes = np.asarray(codes, dtype=np.float64)
        if codes.ndim != 2 or codes.shape[0] == 0:
            raise DimensionError(f"codes must be a non-empty (k, d_c) matrix, got {codes.shape}")
        if not np.all(np.isfinite(codes)):
            raise ValueError("codebook rows must be finite")
        if projection is None:
            projection = np.eye(codes.shape[1])
        projection = np.asarray(projection, dtype=np.float64)
        if projection.ndim != 2 or projection.shape[1] != codes.shape[1]:
            raise DimensionError(
                f"projection {projection.shape} does not act on codes of width {codes.shape[1]}"
            )
        if rbf_scale <= 0:
            raise ValueError(f"rbf_scale must be positive, got {rbf_scale}")

        self.codes = Tensor.parameter(codes)
        self.projection = Tensor.parameter(projection)
        self.rbf_scale = float(rbf_scale)

    @classmethod
    def random(
        cls,
        k: int,
        d_c: int,
        rng: np.random.Generator,
        d_p: int | None = None,
        rbf_scale: float = DEFAULT_RBF_SCALE,
        projection_noise: float = 0.01,
    ) -> Codebook:
        """
        Draw codes i.i.d. N(0, 1/d_c) and start P at identity plus small noise.

        Args:
            k: Number of entries
            d_c: Code width
            rng: Source of randomness
            d_p: Projection output width (defaults to d_c)
            rbf_scale: Uniformity kernel scale t
            projection_noise: Standard deviation of the noise added to the identity

        Returns:
            New codebook
        """
        d_p = d_p or d_c
        codes = rng.normal(0.0, 1.0 / np.sqrt(d_c), size=(k, d_c))
        projection = np.eye(d_p, d_c) + projection_noise * rng.normal(size=(d_p, d_c))
        return cls(codes, projection, rbf_scale)

    @property
    def k(self) -> int:
        return self.codes.shape[0]

    @property
    def d_c(self) -> int:
        return self.codes.shape[1]

    @property
    def d_p(self) -> int:
        return self.projection.shape[0]

    def parameters(self) -> dict[str, Tensor]:
        """Named trainable tensors."""
        return {"codebook.codes": self.codes, "codebook.projection": self.projection}

    def normalized_codes(self) -> np.ndarray:
        """Projected unit-norm codes P c_j / ||P c_j|| (no gradient)."""
        projected = self.codes.data @ self.projection.data.T
        return projected / np.linalg.norm(projected, axis=1, keepdims=True)

    def nearest(self, subs: np.ndarray) -> np.ndarray:
        """Index of the nearest code for every row of ``subs``."""
        subs = np.atleast_2d(np.asarray(subs, dtype=np.float64))
        if subs.shape[1] != self.d_c:
            raise DimensionError(
                f"sub-vector width {subs.shape[1]} does not match code width {self.d_c}"
            )
        # argmin returns the first minimum, which is the lowest-index tie-break
        return np.argmin(cdist(subs, self.codes.data, "sqeuclidean"), axis=1)

    def __repr__(self) -> str:
        return f"Codebook(k={self.k}, d_c={self.d_c}, d_p={self.d_p}, t={self.rbf_scale})"


@dataclass
class QuantizedStyle:
    """
    Split / quantize / concatenate record for a batch of style vectors.

    Attributes:
        pre: Style vectors w, shape (n, d_w)
        sub_vectors: Contiguous sub-vectors, shape (n * s, d_c)
        indices: Selected code index per slot, shape (n, s)
        quantized_subs: Selected codebook rows, shape (n * s, d_c); gradient reaches the codes
        proxy: Concatenated quantized vector, shape (n, d_w); gradient reaches ``pre``
        s: Number of slots per style vector
    """

    pre: Tensor
    sub_vectors: Tensor
    indices: np.ndarray
    quantized_subs: Tensor
    proxy: Tensor
    s: int

    @property
    def batch_size(self) -> int:
        return self.pre.shape[0]

    def code_path(self) -> Tensor:
        """Proxy value whose gradient reaches both the selected codes and ``pre``."""
        rows = reshape(self.quantized_subs, self.proxy.shape)
        return self.proxy + (rows - stop_gradient(rows))


def split(w: np.ndarray, s: int) -> list[np.ndarray]:
    """
    Partition a style vector into s contiguous sub-vectors.

    Args:
        w: Style vector of length d_w
        s: Number of slots

    Returns:
        List of s arrays of length d_w / s, in order

    Raises:
        DimensionError: If s does not divide d_w
    """
    w = np.asarray(w, dtype=np.float64)
    if s <= 0 or w.shape[-1] % s != 0:
        raise DimensionError(f"cannot split width {w.shape[-1]} into {s} equal sub-vectors")
    return list(w.reshape(s, -1))


def quantize(sub: np.ndarray, codebook: Codebook) -> tuple[int, np.ndarray]:
    """
    Snap one sub-vector to its nearest codebook row.

    Args:
        sub: Sub-vector of width d_c
        codebook: Codebook to search

    Returns:
        Tuple of (index, code row)
    """
    sub = np.asarray(sub, dtype=np.float64)
    if sub.ndim != 1:
        raise DimensionError(f"quantize expects a single sub-vector, got shape {sub.shape}")
    idx = int(codebook.nearest(sub[None, :])[0])
    return idx, codebook.codes.data[idx].copy()


def quantize_style(w: Tensor | np.ndarray, codebook: Codebook) -> QuantizedStyle:
    """
    Quantize a batch of style vectors into the proxy space.

    Args:
        w: Style vectors, shape (n, d_w) or (d_w,)
        codebook: Shared codebook

    Returns:
        QuantizedStyle record; ``proxy`` is wired through the straight-through estimator
    """
    if not isinstance(w, Tensor):
        w = Tensor(w)
    if w.ndim == 1:
        w = reshape(w, (1, w.shape[0]))
    n, d_w = w.shape
    if d_w % codebook.d_c != 0:
        raise DimensionError(f"code width {codebook.d_c} does not divide style width {d_w}")
    s = d_w // codebook.d_c

    subs = reshape(w, (n * s, codebook.d_c))
    indices = codebook.nearest(subs.data)
    quantized = take_rows(codebook.codes, indices)
    proxy = reshape(straight_through(subs, quantized), (n, d_w))
    return QuantizedStyle(
        pre=w,
        sub_vectors=subs,
        indices=indices.reshape(n, s),
        quantized_subs=quantized,
        proxy=proxy,
        s=s,
    )
