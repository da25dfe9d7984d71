"""Per-step objectives for the discriminator and generator sides."""

from __future__ import annotations

import numpy as np

from sqlab.autodiff import Tensor, stop_gradient
from sqlab.config.schema import TrainConfig
from sqlab.networks.model import GanModel, discriminate, generate, map_style
from sqlab.objectives import (
    adv_d,
    adv_g,
    cr_d,
    cr_g,
    perturb,
    qcr_d,
    total_d,
    total_g,
)
from sqlab.quantizer import QuantizedStyle, quantize_style, sq_loss, uniformity_loss


def generator_input(
    z: np.ndarray, model: GanModel, quantized: bool
) -> tuple[Tensor, QuantizedStyle | None]:
    """Style vectors fed to g: the quantized proxy in SQ modes, f_W(z) otherwise."""
    w = map_style(z, model)
    if not quantized:
        return w, None
    q = quantize_style(w, model.codebook)
    return q.proxy, q


def sample(z: np.ndarray, model: GanModel, quantized: bool) -> np.ndarray:
    """Generated samples as a plain array."""
    g_in, _ = generator_input(z, model, quantized)
    return generate(g_in, model).data.copy()


def discriminator_objective(
    model: GanModel,
    config: TrainConfig,
    x_real: np.ndarray,
    z: np.ndarray,
    perturb_rng: np.random.Generator,
) -> tuple[Tensor, dict[str, float]]:
    """
    total_d on one batch; the generator path enters as constant samples.

    Returns:
        Tuple of (total_d tensor, term values)
    """
    mode, weights = config.mode, config.weights
    x_fake = stop_gradient(generate(generator_input(z, model, mode.quantized)[0], model))
    fake_logits = discriminate(x_fake, model)
    adv = adv_d(discriminate(x_real, model), fake_logits)
    terms = {"adv_d": adv.item()}

    qcr = None
    if mode.quantized and weights.lambda_qcr > 0:
        qcr = qcr_d(model, z, weights.sigma, rng=perturb_rng)
        terms["qcr"] = qcr.item()

    cr = None
    if mode.consistency:
        z_b = perturb(z, weights.sigma, perturb_rng)
        x_b = stop_gradient(generate(map_style(z_b, model), model))
        cr = cr_d(fake_logits, discriminate(x_b, model), weights.lambda_fd)
        terms["cr_d"] = cr.item()

    total = total_d(adv, weights, qcr=qcr, cr=cr)
    terms["total_d"] = total.item()
    return total, terms


def generator_objective(
    model: GanModel,
    config: TrainConfig,
    z: np.ndarray,
    perturb_rng: np.random.Generator,
) -> tuple[Tensor, dict[str, float], QuantizedStyle | None]:
    """
    total_g on one batch.

    Returns:
        Tuple of (total_g tensor, term values, quantized batch or None)
    """
    mode, weights = config.mode, config.weights
    g_in, q = generator_input(z, model, mode.quantized)
    fake = generate(g_in, model)
    adv = adv_g(discriminate(fake, model))
    terms = {"adv_g": adv.item()}

    sq = uniformity = None
    if q is not None:
        sq = sq_loss(q, weights.beta)
        terms["sq"] = sq.item()
        if config.codebook.use_uniformity:
            uniformity = uniformity_loss(model.codebook)
            terms["uniformity"] = uniformity.item()

    cr = None
    if mode.consistency:
        z_b = perturb(z, weights.sigma, perturb_rng)
        cr = cr_g(fake, generate(map_style(z_b, model), model), weights.lambda_g)
        terms["cr_g"] = cr.item()

    total = total_g(adv, weights, sq=sq, uniformity=uniformity, cr=cr)
    terms["total_g"] = total.item()
    return total, terms, q
