"""
Pydantic models for experiment configuration.

A TrainConfig is the complete description of one run: dimensions, network
shapes, loss weights, codebook, codebook initialization, optimizer, evaluation,
checkpointing and dataset. Unknown keys are rejected at every level.
"""

import hashlib
import logging
from enum import Enum
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from sqlab.data.datasets import DatasetSpec
from sqlab.networks.mlp import MLPSpec, Nonlinearity
from sqlab.networks.model import ModelDims
from sqlab.objectives.total import LossWeights
from sqlab.transport.cost import Metric
from sqlab.transport.sinkhorn import DEFAULT_ETA, DEFAULT_MAX_ITER, DEFAULT_TOL


logger = logging.getLogger(__name__)


class Mode(str, Enum):
    """Training arm."""

    PLAIN_GAN = "plain_gan"
    GAN_CR = "gan_cr"
    SQ_GAN = "sq_gan"
    SQ_GAN_CBI = "sq_gan_cbi"

    @property
    def quantized(self) -> bool:
        return self in (Mode.SQ_GAN, Mode.SQ_GAN_CBI)

    @property
    def consistency(self) -> bool:
        return self is Mode.GAN_CR


class NetworkSettings(BaseModel):
    """Hidden widths and depths of the three networks."""

    mapper_hidden: int = Field(default=64, gt=0, description="Mapping network width")
    mapper_depth: int = Field(default=3, ge=1, description="Mapping network layers")
    generator_hidden: int = Field(default=64, gt=0, description="Generator width")
    generator_depth: int = Field(default=3, ge=1, description="Generator layers")
    discriminator_hidden: int = Field(default=64, gt=0, description="Discriminator width")
    discriminator_depth: int = Field(default=3, ge=2, description="Discriminator layers")
    hidden_act: Nonlinearity = Field(default="leaky_relu", description="Hidden activation")

    model_config = {"extra": "forbid"}

    def specs(self, dims: ModelDims, seeds: dict[str, int]) -> dict[str, MLPSpec]:
        """MLP specs keyed by network name."""
        return {
            "mapper": MLPSpec.stack(
                dims.d_z,
                self.mapper_hidden,
                dims.d_w,
                self.mapper_depth,
                seed=seeds["mapper"],
                hidden_act=self.hidden_act,
            ),
            "generator": MLPSpec.stack(
                dims.d_w,
                self.generator_hidden,
                dims.data_dim,
                self.generator_depth,
                seed=seeds["generator"],
                hidden_act=self.hidden_act,
            ),
            "discriminator": MLPSpec.stack(
                dims.data_dim,
                self.discriminator_hidden,
                1,
                self.discriminator_depth,
                seed=seeds["discriminator"],
                hidden_act=self.hidden_act,
            ),
        }


class CodebookSettings(BaseModel):
    """Codebook size and regularizer settings."""

    k: int = Field(default=256, ge=2, description="Number of codes")
    d_c: int | None = Field(default=None, gt=0, description="Code width; must equal d_w / s")
    d_p: int | None = Field(default=None, gt=0, description="Projection width (defaults to d_c)")
    rbf_scale: float = Field(default=2.0, gt=0, description="Uniformity kernel scale t")
    use_uniformity: bool = Field(default=True, description="Include the uniformity regularizer")

    model_config = {"extra": "forbid"}


class ProviderSettings(BaseModel):
    """Frozen feature provider used for codebook initialization."""

    kind: Literal["frozen_random_mlp", "file_backed", "vocabulary"] = "frozen_random_mlp"
    d_e: int = Field(default=16, gt=0, description="Feature width")
    tokens: int = Field(default=4, gt=0, description="Tokens per data sample (l)")
    hidden: int = Field(default=32, gt=0, description="Frozen trunk width")
    words: int = Field(default=8, gt=0, description="Vocabulary size (vocabulary)")
    radius: float = Field(default=2.0, gt=0, description="Anchor circle radius (vocabulary)")
    path: Path | None = Field(default=None, description="Feature file (file_backed)")
    shape: tuple[int, int, int] | None = Field(
        default=None, description="Declared (n, tokens, d_e) of the feature file"
    )

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def check_kind(self) -> "ProviderSettings":
        if self.kind == "file_backed" and self.path is None:
            raise ValueError("file_backed provider needs a path")
        if self.kind == "vocabulary" and self.tokens > self.words:
            raise ValueError(f"tokens ({self.tokens}) cannot exceed words ({self.words})")
        return self


class CBISettings(BaseModel):
    """Codebook initialization schedule and alignment settings."""

    steps: int = Field(default=2000, ge=0, description="Initialization steps")
    batch_size: int = Field(default=64, gt=0, description="Data samples per step (n)")
    code_batch_size: int = Field(default=64, gt=0, description="Latents per step (m)")
    eta: float = Field(default=DEFAULT_ETA, gt=0, description="Sinkhorn entropic weight")
    tol: float = Field(default=DEFAULT_TOL, gt=0, description="Sinkhorn tolerance")
    max_iter: int = Field(default=DEFAULT_MAX_ITER, gt=0, description="Sinkhorn iteration cap")
    log_domain: bool = Field(default=False, description="Always use the log-domain solver")
    metric: Metric = Field(default="cosine", description="Alignment distance")
    ot_weight: float = Field(default=1.0, ge=0, description="Weight of the OT term")
    lr: float = Field(default=2e-4, gt=0, description="Learning rate")
    embedder_hidden: int = Field(default=32, gt=0, description="Embedder MLP width")
    embedder_depth: int = Field(default=2, ge=1, description="Embedder MLP layers")
    provider: ProviderSettings = Field(default_factory=ProviderSettings)

    model_config = {"extra": "forbid"}


class OptimizerSettings(BaseModel):
    """Adversarial-phase optimizer and schedule."""

    lr_g: float = Field(default=2e-4, gt=0, description="Generator-side learning rate")
    lr_d: float = Field(default=2e-4, gt=0, description="Discriminator learning rate")
    betas: tuple[float, float] = Field(default=(0.5, 0.999), description="Moment decays")
    steps: int = Field(default=20000, ge=0, description="Adversarial steps")
    batch_size: int = Field(default=64, gt=0, description="Batch size")

    model_config = {"extra": "forbid"}

    @field_validator("betas")
    @classmethod
    def validate_betas(cls, v: tuple[float, float]) -> tuple[float, float]:
        if not all(0.0 <= b < 1.0 for b in v):
            raise ValueError(f"betas must lie in [0, 1), got {v}")
        return v


class EvalSettings(BaseModel):
    """Metric cadence and sample counts."""

    interval: int = Field(default=500, gt=0, description="Steps between evaluations")
    samples: int = Field(default=2000, ge=2, description="Generated samples per evaluation")
    mmd_bandwidth: float = Field(default=0.5, gt=0, description="Gaussian kernel bandwidth")
    coverage_threshold: float = Field(default=0.01, gt=0, le=1, description="Mass to cover a mode")

    model_config = {"extra": "forbid"}


class CheckpointSettings(BaseModel):
    """Checkpoint cadence; the final state is always written."""

    interval: int = Field(default=0, ge=0, description="Steps between checkpoints (0 = final only)")

    model_config = {"extra": "forbid"}


class TrainConfig(BaseModel):
    """
    Full experiment description.

    Attributes:
        mode: Training arm
        seed: Run seed; every random stream derives from it
        output_dir: Directory receiving metrics, checkpoints and diagnostics
        progress: Show progress bars
        model: Latent, style and data widths
        networks: Network shapes
        weights: Loss weights
        codebook: Codebook settings
        cbi: Codebook initialization (required for sq_gan_cbi)
        optimizer: Optimizer and schedule
        eval: Evaluation settings
        checkpoint: Checkpoint cadence
        dataset: Synthetic dataset
    """

    mode: Mode = Field(default=Mode.SQ_GAN, description="Training arm")
    seed: int = Field(default=0, description="Run seed")
    output_dir: Path = Field(default=Path("runs/default"), description="Output directory")
    progress: bool = Field(default=True, description="Show progress bars")

    model: ModelDims = Field(default_factory=ModelDims)
    networks: NetworkSettings = Field(default_factory=NetworkSettings)
    weights: LossWeights = Field(default_factory=LossWeights)
    codebook: CodebookSettings = Field(default_factory=CodebookSettings)
    cbi: CBISettings | None = None
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)
    eval: EvalSettings = Field(default_factory=EvalSettings)
    checkpoint: CheckpointSettings = Field(default_factory=CheckpointSettings)
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def check_consistent(self) -> "TrainConfig":
        if self.mode is Mode.SQ_GAN_CBI and self.cbi is None:
            raise ValueError("mode sq_gan_cbi requires a [cbi] section")
        if self.mode is not Mode.SQ_GAN_CBI and self.cbi is not None:
            logger.warning(f"[cbi] section is ignored for mode {self.mode.value}")
        if self.codebook.d_c is not None and self.codebook.d_c != self.model.d_c:
            raise ValueError(
                f"codebook.d_c={self.codebook.d_c} does not equal "
                f"d_w / s = {self.model.d_w} / {self.model.s} = {self.model.d_c}"
            )
        if self.model.data_dim != self.dataset.data_dim:
            raise ValueError(
                f"model.data_dim={self.model.data_dim} does not match the "
                f"{self.dataset.kind} dataset width {self.dataset.data_dim}"
            )
        return self

    def to_json(self) -> str:
        """JSON in field order, used for hashing and checkpoint headers."""
        return self.model_dump_json(round_trip=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()
