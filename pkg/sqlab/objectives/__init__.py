"""Adversarial, consistency and composite training objectives."""

from sqlab.objectives.adversarial import adv_d, adv_g
from sqlab.objectives.consistency import cr_d, cr_g, perturb, qcr_d, quantized_samples
from sqlab.objectives.total import LossBreakdown, LossWeights, total_d, total_g


__all__ = [
    "LossBreakdown",
    "LossWeights",
    "adv_d",
    "adv_g",
    "cr_d",
    "cr_g",
    "perturb",
    "qcr_d",
    "quantized_samples",
    "total_d",
    "total_g",
]
