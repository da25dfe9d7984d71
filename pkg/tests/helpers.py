"""Finite-difference gradient checks shared by the test modules."""

from collections.abc import Callable, Sequence

import numpy as np

from sqlab.autodiff import Tensor


def numerical_gradient(
    fn: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-6
) -> np.ndarray:
    """Central differences of a scalar function at x (x is restored afterwards)."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        original = x[idx]
        x[idx] = original + eps
        plus = fn(x)
        x[idx] = original - eps
        minus = fn(x)
        x[idx] = original
        grad[idx] = (plus - minus) / (2.0 * eps)
    return grad


def assert_gradients_match(
    loss_fn: Callable[..., Tensor],
    arrays: Sequence[np.ndarray],
    rtol: float = 1e-5,
    atol: float = 1e-7,
) -> None:
    """Compare backward() gradients of a scalar graph with central differences."""
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    params = [Tensor.parameter(a) for a in arrays]
    loss_fn(*params).backward()

    for i, param in enumerate(params):

        def evaluate(x: np.ndarray, i: int = i) -> float:
            inputs = [Tensor(x) if j == i else Tensor(a) for j, a in enumerate(arrays)]
            return loss_fn(*inputs).item()

        expected = numerical_gradient(evaluate, arrays[i])
        actual = param.grad if param.grad is not None else np.zeros_like(arrays[i])
        np.testing.assert_allclose(actual, expected, rtol=rtol, atol=atol)
