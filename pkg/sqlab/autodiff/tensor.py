"""
Reverse-mode automatic differentiation over dense float64 arrays.

Every operation returns a new Tensor. When any input requires a gradient the
result carries a Node that records its inputs and a backward rule. Calling
``backward()`` on a scalar traces the reachable nodes into a Graph, ordered by
creation, and runs each rule exactly once in reverse order.

Broadcasting is limited to scalar (0-d) operands; anything else goes through
the explicit ``broadcast_to`` op.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import special

from sqlab.exceptions import DimensionError, DomainError


BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_SEQUENCE = itertools.count()

DEFAULT_LEAKY_SLOPE = 0.2


@dataclass(eq=False)
class Node:
    """One recorded operation: inputs, output id and the backward rule."""

    op: str
    inputs: tuple[Tensor, ...]
    output_id: int
    backward: BackwardFn
    seq: int = field(default_factory=lambda: next(_SEQUENCE))


@dataclass
class Graph:
    """Nodes reachable from a root, in creation (topological) order."""

    nodes: list[Node] = field(default_factory=list)

    @classmethod
    def trace(cls, root: Tensor) -> Graph:
        """Collect every node the root depends on."""
        seen: set[int] = set()
        nodes: list[Node] = []
        stack = [root]
        while stack:
            tensor = stack.pop()
            node = tensor._node
            if node is None or id(node) in seen:
                continue
            seen.add(id(node))
            nodes.append(node)
            stack.extend(node.inputs)
        nodes.sort(key=lambda n: n.seq)
        return cls(nodes=nodes)

    def backward(self, root: Tensor, seed: np.ndarray) -> None:
        """Propagate ``seed`` from root to every leaf that requires grad."""
        grads: dict[int, np.ndarray] = {}
        _accumulate(root, seed, grads)
        for node in reversed(self.nodes):
            upstream = grads.pop(node.output_id, None)
            if upstream is None:
                continue
            for tensor, grad in zip(node.inputs, node.backward(upstream)):
                if grad is not None and tensor.requires_grad:
                    _accumulate(tensor, grad, grads)


def _accumulate(tensor: Tensor, grad: np.ndarray, grads: dict[int, np.ndarray]) -> None:
    if tensor._node is None:
        if tensor.grad is None:
            tensor.grad = np.zeros_like(tensor.data)
        tensor.grad += grad
    elif id(tensor) in grads:
        grads[id(tensor)] = grads[id(tensor)] + grad
    else:
        grads[id(tensor)] = grad


class Tensor:
    """Dense float64 array that participates in a differentiation graph."""

    # ndarray arithmetic defers to Tensor's reflected operators
    __array_priority__ = 100

    def __init__(self, data: Any, requires_grad: bool = False) -> None:
        """
        Create a tensor.

        Args:
            data: Array-like values (converted to float64)
            requires_grad: Whether gradients should accumulate into this tensor
        """
        self.data: np.ndarray = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._node: Node | None = None

    @classmethod
    def parameter(cls, data: Any) -> Tensor:
        """Create a trainable leaf."""
        return cls(np.array(data, dtype=np.float64), requires_grad=True)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: np.ndarray | None = None) -> Graph:
        """
        Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``.

        Args:
            grad: Upstream gradient; defaults to 1 for scalar tensors

        Returns:
            The traced graph (useful for inspection)
        """
        if grad is None:
            if self.size != 1:
                raise DimensionError(f"backward() needs an explicit grad for shape {self.shape}")
            grad = np.ones_like(self.data)
        graph = Graph.trace(self)
        graph.backward(self, np.asarray(grad, dtype=np.float64))
        return graph

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # Operators

    def __add__(self, other: Any) -> Tensor:
        return add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        return add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        return sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        return mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        return div(self, other)

    def __rtruediv__(self, other: Any) -> Tensor:
        return div(other, self)

    def __neg__(self) -> Tensor:
        return neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __getitem__(self, key: Any) -> Tensor:
        return index(self, key)

    # Method forms

    def sum(self, axis: int | None = None) -> Tensor:
        return reduce_sum(self, axis)

    def mean(self, axis: int | None = None) -> Tensor:
        return reduce_mean(self, axis)

    def l2_norm_sq(self, axis: int | None = None) -> Tensor:
        return l2_norm_sq(self, axis)

    def exp(self) -> Tensor:
        return exp(self)

    def log(self) -> Tensor:
        return log(self)

    def square(self) -> Tensor:
        return square(self)

    def sqrt(self) -> Tensor:
        return sqrt(self)

    def reshape(self, *shape: int) -> Tensor:
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape)

    def broadcast_to(self, shape: tuple[int, ...]) -> Tensor:
        return broadcast_to(self, shape)

    @property
    def T(self) -> Tensor:  # noqa: N802
        return transpose(self)


def _as_tensor(value: Any) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data: np.ndarray, op: str, inputs: tuple[Tensor, ...], backward: BackwardFn) -> Tensor:
    out = Tensor(data, requires_grad=any(t.requires_grad for t in inputs))
    if out.requires_grad:
        out._node = Node(op=op, inputs=inputs, output_id=id(out), backward=backward)
    return out


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def _fit(grad: np.ndarray, target: Tensor) -> np.ndarray:
    """Reduce a gradient onto a scalar operand."""
    return np.asarray(grad.sum()) if target.ndim == 0 and grad.ndim != 0 else grad


def _check_axis(x: Tensor, axis: int | None) -> None:
    if axis is not None and not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"invalid axis {axis} for shape {x.shape}")


def _expand(grad: np.ndarray, x: Tensor, axis: int | None) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(grad, x.shape)
    return np.broadcast_to(np.expand_dims(grad, axis), x.shape)


# Elementwise


def add(a: Any, b: Any) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_same_shape("add", a, b)
    return _make(a.data + b.data, "add", (a, b), lambda g: (_fit(g, a), _fit(g, b)))


def sub(a: Any, b: Any) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_same_shape("sub", a, b)
    return _make(a.data - b.data, "sub", (a, b), lambda g: (_fit(g, a), _fit(-g, b)))


def mul(a: Any, b: Any) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_same_shape("mul", a, b)
    return _make(
        a.data * b.data,
        "mul",
        (a, b),
        lambda g: (_fit(g * b.data, a), _fit(g * a.data, b)),
    )


def div(a: Any, b: Any) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_same_shape("div", a, b)
    return _make(
        a.data / b.data,
        "div",
        (a, b),
        lambda g: (_fit(g / b.data, a), _fit(-g * a.data / b.data**2, b)),
    )


def neg(x: Tensor) -> Tensor:
    return _make(-x.data, "neg", (x,), lambda g: (-g,))


def exp(x: Tensor) -> Tensor:
    out_data = np.exp(x.data)
    return _make(out_data, "exp", (x,), lambda g: (g * out_data,))


def log(x: Tensor) -> Tensor:
    bad = np.argwhere(x.data <= 0)
    if len(bad):
        idx = tuple(int(i) for i in bad[0])
        raise DomainError("log", idx, float(x.data[idx]))
    return _make(np.log(x.data), "log", (x,), lambda g: (g / x.data,))


def square(x: Tensor) -> Tensor:
    return _make(x.data**2, "square", (x,), lambda g: (2.0 * x.data * g,))


def sqrt(x: Tensor) -> Tensor:
    """Square root; defined at 0 with subgradient 0."""
    bad = np.argwhere(x.data < 0)
    if len(bad):
        idx = tuple(int(i) for i in bad[0])
        raise DomainError("sqrt", idx, float(x.data[idx]))
    out_data = np.sqrt(x.data)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        safe = np.where(out_data > 0, out_data, 1.0)
        return (np.where(out_data > 0, g / (2.0 * safe), 0.0),)

    return _make(out_data, "sqrt", (x,), backward)


def leaky_relu(x: Tensor, alpha: float = DEFAULT_LEAKY_SLOPE) -> Tensor:
    slope = np.where(x.data > 0, 1.0, alpha)
    return _make(x.data * slope, "leaky_relu", (x,), lambda g: (g * slope,))


def tanh(x: Tensor) -> Tensor:
    out_data = np.tanh(x.data)
    return _make(out_data, "tanh", (x,), lambda g: (g * (1.0 - out_data**2),))


def softplus(x: Tensor) -> Tensor:
    """log(1 + exp(x)), evaluated stably."""
    return _make(
        np.logaddexp(0.0, x.data), "softplus", (x,), lambda g: (g * special.expit(x.data),)
    )


def elementwise(kind: str, *inputs: Any, alpha: float = DEFAULT_LEAKY_SLOPE) -> Tensor:
    """
    Dispatch an elementwise op by name.

    Args:
        kind: One of add, sub, mul, div, leaky_relu, exp, log, square, sqrt, tanh, softplus
        *inputs: Operands (two for binary kinds, one otherwise)
        alpha: Negative slope for leaky_relu

    Returns:
        Result tensor
    """
    binary = {"add": add, "sub": sub, "mul": mul, "div": div}
    unary = {"exp": exp, "log": log, "square": square, "sqrt": sqrt, "tanh": tanh}
    if kind in binary:
        return binary[kind](*inputs)
    if kind in unary:
        return unary[kind](_as_tensor(inputs[0]))
    if kind == "softplus":
        return softplus(_as_tensor(inputs[0]))
    if kind == "leaky_relu":
        return leaky_relu(_as_tensor(inputs[0]), alpha)
    raise ValueError(f"Unknown elementwise kind: {kind}")


# Linear algebra and reductions


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return _make(a.data @ b.data, "matmul", (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def reduce_sum(x: Tensor, axis: int | None = None) -> Tensor:
    _check_axis(x, axis)
    return _make(
        np.asarray(x.data.sum(axis=axis)), "sum", (x,), lambda g: (_expand(g, x, axis).copy(),)
    )


def reduce_mean(x: Tensor, axis: int | None = None) -> Tensor:
    _check_axis(x, axis)
    count = x.size if axis is None else x.shape[axis]
    return _make(
        np.asarray(x.data.mean(axis=axis)),
        "mean",
        (x,),
        lambda g: (_expand(g, x, axis) / count,),
    )


def l2_norm_sq(x: Tensor, axis: int | None = None) -> Tensor:
    _check_axis(x, axis)
    return _make(
        np.asarray((x.data**2).sum(axis=axis)),
        "l2_norm_sq",
        (x,),
        lambda g: (2.0 * x.data * _expand(g, x, axis),),
    )


def reduction(kind: str, x: Tensor, axis: int | None = None) -> Tensor:
    """Dispatch a reduction (sum, mean, l2_norm_sq) by name."""
    table = {"sum": reduce_sum, "mean": reduce_mean, "l2_norm_sq": l2_norm_sq}
    if kind not in table:
        raise ValueError(f"Unknown reduction kind: {kind}")
    return table[kind](x, axis)


# Shape manipulation


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out_data = x.data.reshape(tuple(shape))
    except ValueError as e:
        raise DimensionError(f"reshape: cannot view {x.shape} as {tuple(shape)}") from e
    return _make(out_data, "reshape", (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor) -> Tensor:
    if x.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {x.shape}")
    return _make(x.data.T.copy(), "transpose", (x,), lambda g: (g.T,))


def broadcast_to(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Explicitly expand size-1 (or missing leading) axes."""
    try:
        out_data = np.broadcast_to(x.data, shape).copy()
    except ValueError as e:
        raise DimensionError(f"broadcast_to: cannot expand {x.shape} to {shape}") from e
    lead = len(shape) - x.ndim

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = g.sum(axis=tuple(range(lead))) if lead else g
        axes = tuple(i for i, d in enumerate(x.shape) if d == 1 and grad.shape[i] != 1)
        if axes:
            grad = grad.sum(axis=axes, keepdims=True)
        return (grad.reshape(x.shape),)

    return _make(out_data, "broadcast_to", (x,), backward)


def take_rows(x: Tensor, indices: np.ndarray) -> Tensor:
    """Gather rows ``x[indices]``; repeated rows accumulate gradient."""
    idx = np.asarray(indices, dtype=np.int64)
    if x.ndim != 2:
        raise DimensionError(f"take_rows expects a matrix, got shape {x.shape}")

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros_like(x.data)
        np.add.at(grad, idx, g)
        return (grad,)

    return _make(x.data[idx], "take_rows", (x,), backward)


def index(x: Tensor, key: Any) -> Tensor:
    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros_like(x.data)
        np.add.at(grad, key, g)
        return (grad,)

    return _make(np.array(x.data[key]), "index", (x,), backward)


def concat(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    parts = tuple(tensors)
    if not parts:
        raise DimensionError("concat needs at least one tensor")
    try:
        out_data = np.concatenate([t.data for t in parts], axis=axis)
    except ValueError as e:
        shapes = [t.shape for t in parts]
        raise DimensionError(f"concat along axis {axis}: incompatible shapes {shapes}") from e
    bounds = np.cumsum([t.shape[axis] for t in parts])[:-1]
    return _make(out_data, "concat", parts, lambda g: tuple(np.split(g, bounds, axis=axis)))


# Gradient routing


def stop_gradient(x: Tensor) -> Tensor:
    """Forward identity; the result is a constant that never accumulates gradient."""
    return Tensor(x.data.copy(), requires_grad=False)


def straight_through(pre: Tensor, quantized: Tensor) -> Tensor:
    """
    Forward the quantized value while routing the gradient to ``pre`` unchanged.

    Args:
        pre: Pre-quantization tensor (receives dL/dout)
        quantized: Quantized tensor (receives nothing through this node)

    Returns:
        Tensor equal to ``quantized``
    """
    if pre.shape != quantized.shape:
        raise DimensionError(f"straight_through: shapes {pre.shape} and {quantized.shape} differ")
    return _make(quantized.data.copy(), "straight_through", (pre,), lambda g: (g,))
