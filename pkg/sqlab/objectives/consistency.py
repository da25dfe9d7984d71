"""
Consistency regularizers.

The baseline terms compare predictions for samples generated from z and z + eps.
The quantization-based term compares discriminator outputs for samples generated
from the quantized styles of z and z + eps, and only trains the discriminator.
"""

import numpy as np

from sqlab.autodiff import Tensor, reduce_mean, square, stop_gradient
from sqlab.exceptions import DimensionError
from sqlab.networks.model import GanModel, discriminate, generate, map_style
from sqlab.quantizer.codebook import Codebook, quantize_style


DEFAULT_SIGMA = 0.1
DEFAULT_LAMBDA_FD = 10.0
DEFAULT_LAMBDA_G = 0.5


def perturb(z: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """z + eps with an independent eps ~ N(0, sigma^2 I) per sample."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return z + sigma * rng.standard_normal(z.shape)


def cr_d(logits_a: Tensor, logits_b: Tensor, lambda_fd: float = DEFAULT_LAMBDA_FD) -> Tensor:
    """
    Discriminator consistency penalty lambda_fd * mean (f_D(a) - f_D(b))^2.

    Args:
        logits_a: Logits on g(z)
        logits_b: Logits on g(z + eps)
        lambda_fd: Weight

    Returns:
        Scalar penalty
    """
    if logits_a.shape != logits_b.shape:
        raise DimensionError(f"cr_d: logits {logits_a.shape} and {logits_b.shape} differ")
    return lambda_fd * reduce_mean(square(logits_a - logits_b))


def cr_g(x_a: Tensor, x_b: Tensor, lambda_g: float = DEFAULT_LAMBDA_G) -> Tensor:
    """
    Generator diversity reward -lambda_g * mean ||g(z) - g(z + eps)||^2.

    The squared norm is averaged over elements as well as the batch.

    Args:
        x_a: Samples g(z)
        x_b: Samples g(z + eps)
        lambda_g: Weight

    Returns:
        Scalar (always <= 0)
    """
    if x_a.shape != x_b.shape:
        raise DimensionError(f"cr_g: samples {x_a.shape} and {x_b.shape} differ")
    return -lambda_g * reduce_mean(square(x_a - x_b))


def quantized_samples(z: np.ndarray, model: GanModel, codebook: Codebook | None = None) -> Tensor:
    """Constant samples g(Q(f_W(z))); no gradient reaches g, f_W or the codebook."""
    book = codebook if codebook is not None else model.codebook
    w = stop_gradient(map_style(z, model))
    return stop_gradient(generate(quantize_style(w, book).proxy, model))


def qcr_d(
    model: GanModel,
    z: np.ndarray,
    sigma: float = DEFAULT_SIGMA,
    codebook: Codebook | None = None,
    rng: np.random.Generator | None = None,
    z_perturbed: np.ndarray | None = None,
) -> Tensor:
    """
    Quantization-based consistency penalty on the discriminator.

    Args:
        model: Model whose discriminator is regularized
        z: Prior latents, shape (n, d_z)
        sigma: Perturbation strength
        codebook: Codebook to quantize with (defaults to the model's)
        rng: Source for eps (required unless ``z_perturbed`` is given)
        z_perturbed: Explicit z + eps (skips sampling)

    Returns:
        Scalar mean ||f_D(g(w^q)) - f_D(g(w'^q))||^2
    """
    z = np.asarray(z, dtype=np.float64)
    if z_perturbed is None:
        if rng is None:
            raise ValueError("qcr_d needs an rng when z_perturbed is not given")
        z_perturbed = perturb(z, sigma, rng)
    x_a = quantized_samples(z, model, codebook)
    x_b = quantized_samples(z_perturbed, model, codebook)
    return reduce_mean(square(discriminate(x_a, model) - discriminate(x_b, model)))
