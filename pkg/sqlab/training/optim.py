"""Adaptive moment estimation over named autodiff parameters."""

import numpy as np

from sqlab.autodiff import Tensor


DEFAULT_LR = 2e-4
DEFAULT_BETAS = (0.5, 0.999)


class Adam:
    """
    Adam optimizer with bias correction.

    Parameters without a gradient after backward() are left untouched and keep
    their moment estimates.
    """

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = DEFAULT_LR,
        betas: tuple[float, float] = DEFAULT_BETAS,
        eps: float = 1e-8,
    ) -> None:
        """
        Initialize optimizer.

        Args:
            params: Named trainable tensors
            lr: Learning rate
            betas: Decay of the first and second moment estimates
            eps: Denominator offset
        """
        if lr <= 0:
            raise ValueError(f"lr must be positive, got {lr}")
        if not all(0.0 <= b < 1.0 for b in betas):
            raise ValueError(f"betas must lie in [0, 1), got {betas}")
        self.params = dict(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.steps = {name: 0 for name in self.params}
        self.m = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in self.params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def grad_norms(self) -> dict[str, float]:
        """L2 norm of every current gradient (0 for parameters without one)."""
        return {
            name: float(np.linalg.norm(p.grad)) if p.grad is not None else 0.0
            for name, p in self.params.items()
        }

    def step(self) -> None:
        b1, b2 = self.betas
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            self.steps[name] += 1
            t = self.steps[name]
            self.m[name] = b1 * self.m[name] + (1.0 - b1) * g
            self.v[name] = b2 * self.v[name] + (1.0 - b2) * g * g
            m_hat = self.m[name] / (1.0 - b1**t)
            v_hat = self.v[name] / (1.0 - b2**t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
