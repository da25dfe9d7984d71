"""Fully connected networks built on the autodiff engine."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator

from sqlab.autodiff import Tensor, leaky_relu, matmul, tanh
from sqlab.exceptions import DimensionError


Nonlinearity = Literal["leaky_relu", "tanh", "none"]


class MLPSpec(BaseModel):
    """
    Shape and initialization of a multilayer perceptron.

    Attributes:
        layer_widths: Widths from input to output, e.g. [16, 64, 64, 2] for three layers
        nonlinearity: Activation after each layer (one entry per layer)
        seed: Seed for the weight initialization
    """

    layer_widths: list[int] = Field(..., min_length=2, description="Input-to-output widths")
    nonlinearity: list[Nonlinearity] = Field(..., description="Activation per layer")
    seed: int = Field(default=0, description="Initialization seed")

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def check_consistent(self) -> "MLPSpec":
        if any(w <= 0 for w in self.layer_widths):
            raise ValueError(f"layer widths must be positive, got {self.layer_widths}")
        if len(self.nonlinearity) != len(self.layer_widths) - 1:
            raise ValueError(
                f"{len(self.layer_widths) - 1} layers need as many nonlinearities, "
                f"got {len(self.nonlinearity)}"
            )
        return self

    @classmethod
    def stack(
        cls,
        d_in: int,
        hidden: int,
        d_out: int,
        depth: int = 3,
        seed: int = 0,
        hidden_act: Nonlinearity = "leaky_relu",
        out_act: Nonlinearity = "none",
    ) -> "MLPSpec":
        """Spec with ``depth`` layers: hidden layers share one width and activation."""
        widths = [d_in] + [hidden] * (depth - 1) + [d_out]
        acts: list[Nonlinearity] = [hidden_act] * (depth - 1) + [out_act]
        return cls(layer_widths=widths, nonlinearity=acts, seed=seed)

    @property
    def d_in(self) -> int:
        return self.layer_widths[0]

    @property
    def d_out(self) -> int:
        return self.layer_widths[-1]

    def parameter_count(self) -> int:
        return sum(a * b + b for a, b in zip(self.layer_widths[:-1], self.layer_widths[1:]))


def _activate(x: Tensor, kind: Nonlinearity) -> Tensor:
    if kind == "leaky_relu":
        return leaky_relu(x)
    if kind == "tanh":
        return tanh(x)
    return x


class MLP:
    """Stack of affine layers with per-layer nonlinearities."""

    def __init__(self, spec: MLPSpec, name: str = "mlp", trainable: bool = True) -> None:
        """
        Initialize weights with N(0, 2 / fan_in) and zero biases.

        Args:
            spec: Network description
            name: Prefix used for parameter names
            trainable: Whether parameters accumulate gradients
        """
        self.spec = spec
        self.name = name
        rng = np.random.default_rng(spec.seed)
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            self.weights.append(Tensor(w, requires_grad=trainable))
            self.biases.append(Tensor(np.zeros((1, fan_out)), requires_grad=trainable))

    def parameters(self) -> dict[str, Tensor]:
        """Named parameters in layer order."""
        params: dict[str, Tensor] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            params[f"{self.name}.{i}.weight"] = w
            params[f"{self.name}.{i}.bias"] = b
        return params

    def forward(self, x: Tensor, return_hidden: bool = False) -> Tensor | tuple[Tensor, Tensor]:
        """
        Run the network on a batch.

        Args:
            x: Input batch, shape (n, d_in)
            return_hidden: Also return the activations feeding the last layer

        Returns:
            Output batch, or (output, penultimate activations)
        """
        if x.ndim != 2 or x.shape[1] != self.spec.d_in:
            raise DimensionError(
                f"{self.name}: expected (n, {self.spec.d_in}) input, got {x.shape}"
            )
        ones = Tensor(np.ones((x.shape[0], 1)))
        hidden = x
        out = x
        for i, (w, b, act) in enumerate(zip(self.weights, self.biases, self.spec.nonlinearity)):
            if i == len(self.weights) - 1:
                hidden = out
            out = _activate(matmul(out, w) + matmul(ones, b), act)
        return (out, hidden) if return_hidden else out

    __call__ = forward
