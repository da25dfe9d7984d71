"""Style-space quantization: codebook, proxy vectors and regularizers."""

from sqlab.quantizer.codebook import Codebook, QuantizedStyle, quantize, quantize_style, split
from sqlab.quantizer.losses import (
    projected_codes,
    sq_loss,
    sq_loss_terms,
    uniformity_loss,
    usage,
    usage_histogram,
)


__all__ = [
    "Codebook",
    "QuantizedStyle",
    "projected_codes",
    "quantize",
    "quantize_style",
    "split",
    "sq_loss",
    "sq_loss_terms",
    "uniformity_loss",
    "usage",
    "usage_histogram",
]
