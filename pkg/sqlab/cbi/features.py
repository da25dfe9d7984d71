"""
Frozen feature providers and the trainable code embedder.

Data samples and code tokens are mapped into one d_e-dimensional feature space.
The provider is frozen: its weights never receive gradients, but gradients do
flow through its encoder to whatever produced the code tokens.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from sqlab.autodiff import Tensor, reshape
from sqlab.data.datasets import mixture_centers
from sqlab.exceptions import DimensionError
from sqlab.networks.mlp import MLP, MLPSpec
from sqlab.quantizer.codebook import QuantizedStyle


logger = logging.getLogger(__name__)

FeatureSource = Literal["data", "codes"]
ProviderKind = Literal["frozen_random_mlp", "file_backed", "vocabulary"]


@dataclass
class FeatureSet:
    """
    Token features of a batch.

    Attributes:
        features: Array of shape (batch, tokens, d_e); a Tensor for code features
        source: Whether the features describe data samples or codes
    """

    features: Tensor
    source: FeatureSource

    def __post_init__(self) -> None:
        if self.features.ndim != 3:
            raise DimensionError(
                f"features must be (batch, tokens, d_e), got {self.features.shape}"
            )
        if not np.all(np.isfinite(self.features.data)):
            raise ValueError(f"{self.source} features contain non-finite values")

    @property
    def batch_size(self) -> int:
        return self.features.shape[0]

    @property
    def tokens(self) -> int:
        return self.features.shape[1]

    @property
    def d_e(self) -> int:
        return self.features.shape[2]

    @property
    def requires_grad(self) -> bool:
        return self.features.requires_grad

    def sample(self, i: int) -> Tensor:
        """Token features of sample i, shape (tokens, d_e)."""
        return self.features[i]


class FeatureProvider(ABC):
    """Frozen encoder shared by data samples and code tokens."""

    kind: ProviderKind

    def __init__(self, d_e: int, tokens: int) -> None:
        if d_e <= 0 or tokens <= 0:
            raise ValueError(f"d_e and tokens must be positive, got {d_e}, {tokens}")
        self.d_e = d_e
        self.tokens = tokens

    @abstractmethod
    def extract(self, x: np.ndarray) -> FeatureSet:
        """
        Features of a batch of data samples.

        Args:
            x: Data batch (the file-backed provider takes row indices instead)

        Returns:
            FeatureSet of shape (n, tokens, d_e) with no gradient attached
        """

    @abstractmethod
    def encode_tokens(self, tokens: Tensor) -> Tensor:
        """
        Frozen encoder applied to each token row.

        Args:
            tokens: Token embeddings, shape (count, d_e)

        Returns:
            Encoded tokens, shape (count, d_e); differentiable w.r.t. ``tokens``
        """


class FrozenRandomMLPProvider(FeatureProvider):
    """
    Randomly initialized, never-trained encoder.

    Each data sample is tokenized by ``tokens`` fixed random projections and every
    token then passes through a shared frozen trunk. Code tokens pass through the
    same trunk, so both sides land in one aligned space.
    """

    kind: ProviderKind = "frozen_random_mlp"

    def __init__(
        self,
        data_dim: int,
        d_e: int = 16,
        tokens: int = 4,
        hidden: int = 32,
        seed: int = 0,
    ) -> None:
        super().__init__(d_e, tokens)
        self.data_dim = data_dim
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.stem = rng.normal(0.0, 1.0 / np.sqrt(data_dim), size=(tokens, data_dim, d_e))
        trunk_seed = int(rng.integers(2**31 - 1))
        self.trunk = MLP(
            MLPSpec.stack(d_e, hidden, d_e, depth=2, seed=trunk_seed, hidden_act="tanh"),
            name="provider",
            trainable=False,
        )

    def encode_tokens(self, tokens: Tensor) -> Tensor:
        if tokens.ndim != 2 or tokens.shape[1] != self.d_e:
            raise DimensionError(f"expected (count, {self.d_e}) tokens, got {tokens.shape}")
        return self.trunk(tokens)

    def extract(self, x: np.ndarray) -> FeatureSet:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.data_dim:
            raise DimensionError(f"expected (n, {self.data_dim}) samples, got {x.shape}")
        n = x.shape[0]
        stem = np.tanh(np.einsum("nd,lde->nle", x, self.stem)).reshape(n * self.tokens, self.d_e)
        encoded = self.trunk(Tensor(stem)).data.reshape(n, self.tokens, self.d_e)
        return FeatureSet(Tensor(encoded), source="data")


class VocabularyProvider(FeatureProvider):
    """
    Features drawn from a known vocabulary of word vectors.

    Every word owns an anchor point in data space and a unit-norm feature vector.
    Token j of a sample is the vector of its j-th nearest anchor, so each data
    feature matrix is a composition of vocabulary entries. The token encoder is
    the identity, which puts embedded codes directly in word space.

    With 2-D data the anchors are the gauss_mixture centers, so the words are the
    mixture modes.
    """

    kind: ProviderKind = "vocabulary"

    def __init__(
        self,
        data_dim: int,
        d_e: int = 16,
        tokens: int = 4,
        words: int = 8,
        radius: float = 2.0,
        seed: int = 0,
    ) -> None:
        super().__init__(d_e, tokens)
        if tokens > words:
            raise ValueError(f"tokens ({tokens}) cannot exceed vocabulary size ({words})")
        self.data_dim = data_dim
        rng = np.random.default_rng(seed)
        if data_dim == 2:
            self.anchors = mixture_centers(words, radius)
        else:
            self.anchors = radius * rng.standard_normal((words, data_dim)) / np.sqrt(data_dim)
        vectors = rng.standard_normal((words, d_e))
        self.vocabulary = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)

    
    def words(self) -> int:
        return self.vocabulary.shape[0]

    def word_indices(self, x: np.ndarray) -> np.ndarray:
        """Vocabulary index of every token, shape (n, tokens), nearest anchor first."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.data_dim:
            raise DimensionError(f"expected (n, {self.data_dim}) samples, got {x.shape}")
        dist = np.linalg.norm(x[:, None, :] - self.anchors[None, :, :], axis=2)
        return np.argsort(dist, axis=1, kind="stable")[:, : self.tokens]

    def encode_tokens(self, tokens: Tensor) -> Tensor:
        if tokens.ndim != 2 or tokens.shape[1] != self.d_e:
            raise DimensionError(f"expected (count, {self.d_e}) tokens, got {tokens.shape}")
        return tokens

    def extract(self, x: np.ndarray) -> FeatureSet:
        return FeatureSet(Tensor(self.vocabulary[self.word_indices(x)]), source="data")


class FileBackedProvider(FeatureProvider):
    """
    Features exported from an external model.

    ``extract`` selects stored rows by index; code tokens are already in the
    feature space once embedded, so the token encoder is the identity.
    """

    kind: ProviderKind = "file_backed"

    def __init__(
        self, path: str | Path, expected_shape: tuple[int, int, int] | None = None
    ) -> None:
        features = read_feature_file(path)
        if expected_shape is not None and features.shape != tuple(expected_shape):
            raise DimensionError(
                f"feature file {path} has shape {features.shape}, declared {tuple(expected_shape)}"
            )
        super().__init__(d_e=features.shape[2], tokens=features.shape[1])
        self.path = Path(path)
        self.features = features
        logger.info(f"Loaded {features.shape[0]} feature rows from {self.path}")

    @property
    def size(self) -> int:
        return self.features.shape[0]

    def encode_tokens(self, tokens: Tensor) -> Tensor:
        if tokens.ndim != 2 or tokens.shape[1] != self.d_e:
            raise DimensionError(f"expected (count, {self.d_e}) tokens, got {tokens.shape}")
        return tokens

    def extract(self, x: np.ndarray) -> FeatureSet:
        rows = np.asarray(x)
        if rows.ndim != 1 or not np.issubdtype(rows.dtype, np.integer):
            raise DimensionError("file-backed features are selected by a 1-D integer index array")
        if rows.size and (rows.min() < 0 or rows.max() >= self.size):
            raise IndexError(
                f"feature rows must lie in [0, {self.size}), got {rows.min()}..{rows.max()}"
            )
        return FeatureSet(Tensor(self.features[rows].astype(np.float64)), source="data")


def write_feature_file(path: str | Path, features: np.ndarray) -> None:
    """
    Write features as an ASCII ``n tokens dim`` header line followed by float32 LE values.

    Args:
        path: Output path
        features: Array of shape (n, tokens, dim)
    """
    features = np.asarray(features)
    if features.ndim != 3:
        raise DimensionError(f"features must be (n, tokens, dim), got {features.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n, tokens, dim = features.shape
    with open(path, "wb") as f:
        f.write(f"{n} {tokens} {dim}\n".encode("ascii"))
        f.write(features.astype("<f4").tobytes())


def read_feature_file(path: str | Path) -> np.ndarray:
    """
    Read a feature file written by :func:`write_feature_file`.

    Args:
        path: Input path

    Returns:
        float32 array of shape (n, tokens, dim)

    Raises:
        ValueError: If the header is malformed or the payload length disagrees with it
    """
    raw = Path(path).read_bytes()
    header, sep, payload = raw.partition(b"\n")
    if not sep:
        raise ValueError(f"{path}: missing header line")
    try:
        n, tokens, dim = (int(v) for v in header.decode("ascii").split())
    except (UnicodeDecodeError, ValueError) as e:
        raise ValueError(f"{path}: header must be three integers 'n tokens dim'") from e
    expected = n * tokens * dim * 4
    if len(payload) != expected:
        raise ValueError(
            f"{path}: expected {expected} payload bytes for ({n}, {tokens}, {dim}), "
            f"got {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(n, tokens, dim).copy()


class CodeEmbedder:
    """Trainable MLP from code width to d_e followed by the provider's frozen encoder."""

    def __init__(
        self,
        d_c: int,
        provider: FeatureProvider,
        hidden: int = 32,
        depth: int = 2,
        seed: int = 0,
    ) -> None:
        self.provider = provider
        spec = MLPSpec.stack(d_c, hidden, provider.d_e, depth=depth, seed=seed)
        self.mlp = MLP(spec, name="embedder")

    @property
    def d_c(self) -> int:
        return self.mlp.spec.d_in

    @property
    def d_e(self) -> int:
        return self.provider.d_e

    def parameters(self) -> dict[str, Tensor]:
        return self.mlp.parameters()

    def embed(self, tokens: Tensor) -> Tensor:
        """MLP then frozen encoder, row by row."""
        return self.provider.encode_tokens(self.mlp(tokens))


def embed_codes(quantized: QuantizedStyle, embedder: CodeEmbedder) -> FeatureSet:
    """
    Code features T: one token per quantized sub-vector.

    The tokens come from ``code_path()``, so gradients reach the embedder MLP,
    the selected codebook rows and the mapping network.

    Args:
        quantized: Quantized batch of m style vectors with s slots
        embedder: Code embedder

    Returns:
        FeatureSet of shape (m, s, d_e)
    """
    d_c = quantized.sub_vectors.shape[1]
    if d_c != embedder.d_c:
        raise DimensionError(f"embedder expects codes of width {embedder.d_c}, got {d_c}")
    m, s = quantized.batch_size, quantized.s
    tokens = reshape(quantized.code_path(), (m * s, d_c))
    encoded = embedder.embed(tokens)
    return FeatureSet(reshape(encoded, (m, s, embedder.d_e)), source="codes")


def embed_data(x: np.ndarray, provider: FeatureProvider) -> FeatureSet:
    """Frozen data features F, shape (n, l, d_e)."""
    features = provider.extract(x)
    if features.requires_grad:
        raise ValueError("data features must not require gradients")
    return features

