"""
sqlab: style-space quantization for GANs at desk scale.

This package provides tools for:
- Reverse-mode differentiation over numpy arrays
- Codebook quantization of style vectors with straight-through gradients
- Adversarial, consistency and quantization objectives
- Entropic optimal transport and codebook initialization by feature alignment
- Training, evaluation, checkpoints and sweeps on synthetic datasets
"""

from importlib.metadata import version

from sqlab.autodiff import Tensor
from sqlab.config import Mode, TrainConfig, load_config
from sqlab.networks import GanModel
from sqlab.quantizer import Codebook, QuantizedStyle, quantize_style
from sqlab.transport import exact_ot, sinkhorn, solve


__version__ = version("sqlab")
__version_info__ = tuple(int(i) for i in __version__.split(".") if i.isdigit())


__all__ = [
    "Codebook",
    "GanModel",
    "Mode",
    "QuantizedStyle",
    "Tensor",
    "TrainConfig",
    "__version__",
    "__version_info__",
    "exact_ot",
    "load_config",
    "quantize_style",
    "sinkhorn",
    "solve",
]
