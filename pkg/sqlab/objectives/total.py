"""Generator-side and discriminator-side objective composition."""

import math

from pydantic import BaseModel, Field

from sqlab.autodiff import Tensor
from sqlab.objectives.consistency import DEFAULT_LAMBDA_FD, DEFAULT_LAMBDA_G, DEFAULT_SIGMA
from sqlab.quantizer.losses import DEFAULT_BETA


class LossWeights(BaseModel):
    """Weights of every regularizer; all nonnegative."""

    lambda_sq: float = Field(default=0.01, ge=0, description="Quantization + uniformity weight")
    lambda_qcr: float = Field(default=0.01, ge=0, description="Quantized consistency weight")
    lambda_fd: float = Field(default=DEFAULT_LAMBDA_FD, ge=0, description="Baseline CR on f_D")
    lambda_g: float = Field(default=DEFAULT_LAMBDA_G, ge=0, description="Baseline CR on g")
    sigma: float = Field(default=DEFAULT_SIGMA, gt=0, description="Latent perturbation std")
    beta: float = Field(default=DEFAULT_BETA, ge=0, description="Commitment weight")

    model_config = {"extra": "forbid"}


class LossBreakdown(BaseModel):
    """Scalar value of every loss term computed in one step (None when not computed)."""

    adv_g: float | None = None
    adv_d: float | None = None
    sq: float | None = None
    uniformity: float | None = None
    qcr: float | None = None
    cr_d: float | None = None
    cr_g: float | None = None
    total_g: float | None = None
    total_d: float | None = None

    def computed(self) -> dict[str, float]:
        """Terms that were evaluated this step."""
        return {k: v for k, v in self.model_dump().items() if v is not None}

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.computed().values())

    def get(self, name: str) -> float:
        """Term value, NaN when it was not computed."""
        value = getattr(self, name)
        return math.nan if value is None else float(value)


def total_g(
    adv: Tensor,
    weights: LossWeights,
    sq: Tensor | None = None,
    uniformity: Tensor | None = None,
    cr: Tensor | None = None,
) -> Tensor:
    """
    adv_g + lambda_sq * (sq + uniformity) [+ cr_g for the CR baseline].

    Terms that are absent, or whose weight is zero, are left out entirely.
    """
    total = adv
    if weights.lambda_sq > 0:
        reg = None
        for term in (sq, uniformity):
            if term is not None:
                reg = term if reg is None else reg + term
        if reg is not None:
            total = total + weights.lambda_sq * reg
    if cr is not None:
        total = total + cr
    return total


def total_d(
    adv: Tensor,
    weights: LossWeights,
    qcr: Tensor | None = None,
    cr: Tensor | None = None,
) -> Tensor:
    """adv_d + lambda_qcr * qcr [+ cr_d for the CR baseline]."""
    total = adv
    if qcr is not None and weights.lambda_qcr > 0:
        total = total + weights.lambda_qcr * qcr
    if cr is not None:
        total = total + cr
    return total
