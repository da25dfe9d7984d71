"""Minimal reverse-mode automatic differentiation."""

from sqlab.autodiff.tensor import (
    Graph,
    Node,
    Tensor,
    add,
    broadcast_to,
    concat,
    div,
    elementwise,
    exp,
    index,
    l2_norm_sq,
    leaky_relu,
    log,
    matmul,
    mul,
    neg,
    reduce_mean,
    reduce_sum,
    reduction,
    reshape,
    softplus,
    sqrt,
    square,
    stop_gradient,
    straight_through,
    sub,
    take_rows,
    tanh,
    transpose,
)


__all__ = [
    "Graph",
    "Node",
    "Tensor",
    "add",
    "broadcast_to",
    "concat",
    "div",
    "elementwise",
    "exp",
    "index",
    "l2_norm_sq",
    "leaky_relu",
    "log",
    "matmul",
    "mul",
    "neg",
    "reduce_mean",
    "reduce_sum",
    "reduction",
    "reshape",
    "softplus",
    "sqrt",
    "square",
    "stop_gradient",
    "straight_through",
    "sub",
    "take_rows",
    "tanh",
    "transpose",
]
