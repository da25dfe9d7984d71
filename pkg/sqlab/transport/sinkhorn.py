"""
Entropic optimal transport by Sinkhorn-Knopp matrix scaling.

Both solvers iterate u <- p / (K v), v <- q / (K^T u) from v = 1 with
K = exp(-C / eta); the log-domain solver performs the same updates on log u and
log v with log-sum-exp so it survives eta values where K underflows. After every
iteration the columns match q exactly, so convergence is measured on the rows.

:func:`solve` divides the cost by its largest entry first, so eta is relative to
the cost scale; the returned state reports costs in the caller's units.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from sqlab.exceptions import EtaTooSmallError
from sqlab.transport.cost import CostMatrix, TransportPlan, as_cost, check_marginals


logger = logging.getLogger(__name__)

DEFAULT_ETA = 0.05
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1000


@dataclass
class SinkhornState:
    """
    Scalings, kernel and diagnostics of one Sinkhorn solve.

    Scalings and kernel are stored as logarithms; ``u``, ``v`` and ``gibbs``
    exponentiate them on demand.
    """

    log_u: np.ndarray
    log_v: np.ndarray
    log_gibbs: np.ndarray
    cost: np.ndarray
    p: np.ndarray
    q: np.ndarray
    eta: float
    iterations: int = 0
    marginal_error: float = np.inf
    converged: bool = False
    error_history: list[float] = field(default_factory=list)
    scale: float = 1.0

    @property
    def u(self) -> np.ndarray:
        return np.exp(self.log_u)

    @property
    def v(self) -> np.ndarray:
        return np.exp(self.log_v)

    @property
    def gibbs(self) -> np.ndarray:
        return np.exp(self.log_gibbs)

    @property
    def coupling(self) -> np.ndarray:
        """gamma = diag(u) K diag(v)."""
        return np.exp(self.log_u[:, None] + self.log_gibbs + self.log_v[None, :])

    @property
    def plan(self) -> TransportPlan:
        return TransportPlan(self.coupling, self.p, self.q)

    @property
    def transport_cost(self) -> float:
        """<gamma, C>."""
        return float(np.sum(self.coupling * self.cost))

    @property
    def entropy(self) -> float:
        """h(gamma) = -sum gamma log gamma (0 log 0 = 0)."""
        gamma = self.coupling
        positive = gamma > 0
        return float(-np.sum(gamma[positive] * np.log(gamma[positive])))

    @property
    def entropic_objective(self) -> float:
        """<gamma, C> - eta h(gamma), with eta in the units of ``cost``."""
        return self.transport_cost - self.eta * self.scale * self.entropy


def _validate(
    cost: CostMatrix | np.ndarray, p: np.ndarray, q: np.ndarray, eta: float, tol: float
) -> tuple[CostMatrix, np.ndarray, np.ndarray]:
    cost = as_cost(cost)
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    p, q = check_marginals(p, q, cost.shape)
    return cost, p, q


def _finish(state: SinkhornState, max_iter: int) -> SinkhornState:
    if not state.converged:
        logger.warning(
            f"Sinkhorn stopped at max_iter={max_iter} with marginal error "
            f"{state.marginal_error:.3e} (eta={state.eta:g})"
        )
    return state


def sinkhorn(
    cost: CostMatrix | np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
    eta: float = DEFAULT_ETA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SinkhornState:
    """
    Plain Sinkhorn-Knopp iteration.

    Args:
        cost: n x m cost matrix
        p: Row marginal
        q: Column marginal
        eta: Entropic weight
        tol: Stop once the largest row-marginal violation is <= tol
        max_iter: Iteration cap; hitting it flags the state instead of raising

    Returns:
        SinkhornState with the coupling and diagnostics

    Raises:
        EtaTooSmallError: If a row or column of K underflows to zero
    """
    cost, p, q = _validate(cost, p, q, eta, tol)
    log_gibbs = -cost.values / eta
    gibbs = np.exp(log_gibbs)
    for axis_gibbs in (gibbs, gibbs.T):
        dead = np.flatnonzero(~axis_gibbs.any(axis=1))
        if len(dead):
            raise EtaTooSmallError(eta, int(dead[0]))

    v = np.ones(cost.shape[1])
    u = np.ones(cost.shape[0])
    state = SinkhornState(
        log_u=np.zeros_like(u),
        log_v=np.zeros_like(v),
        log_gibbs=log_gibbs,
        cost=cost.values,
        p=p,
        q=q,
        eta=eta,
    )
    for it in range(1, max_iter + 1):
        kv = gibbs @ v
        if np.any(kv == 0):
            raise EtaTooSmallError(eta, int(np.flatnonzero(kv == 0)[0]))
        u = p / kv
        ktu = gibbs.T @ u
        if np.any(ktu == 0):
            raise EtaTooSmallError(eta, int(np.flatnonzero(ktu == 0)[0]))
        v = q / ktu
        violation = u * (gibbs @ v) - p
        state.iterations = it
        state.marginal_error = float(np.abs(violation).max())
        state.error_history.append(float(np.abs(violation).sum()))
        if state.marginal_error <= tol:
            state.converged = True
            break

    with np.errstate(divide="ignore"):
        state.log_u = np.log(u)
        state.log_v = np.log(v)
    return _finish(state, max_iter)


def log_domain_sinkhorn(
    cost: CostMatrix | np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
    eta: float = DEFAULT_ETA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SinkhornState:
    """
    Sinkhorn iteration on log-scalings, stable for small eta.

    Same arguments and fixed point as :func:`sinkhorn`.
    """
    cost, p, q = _validate(cost, p, q, eta, tol)
    log_gibbs = -cost.values / eta
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
        log_q = np.log(q)

    state = SinkhornState(
        log_u=np.zeros(cost.shape[0]),
        log_v=np.zeros(cost.shape[1]),
        log_gibbs=log_gibbs,
        cost=cost.values,
        p=p,
        q=q,
        eta=eta,
    )
    for it in range(1, max_iter + 1):
        state.log_u = log_p - logsumexp(log_gibbs + state.log_v[None, :], axis=1)
        state.log_v = log_q - logsumexp(log_gibbs + state.log_u[:, None], axis=0)
        rows = np.exp(logsumexp(log_gibbs + state.log_u[:, None] + state.log_v[None, :], axis=1))
        violation = rows - p
        state.iterations = it
        state.marginal_error = float(np.abs(violation).max())
        state.error_history.append(float(np.abs(violation).sum()))
        if state.marginal_error <= tol:
            state.converged = True
            break
    return _finish(state, max_iter)


def solve(
    cost: CostMatrix | np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
    eta: float = DEFAULT_ETA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    log_domain: bool = False,
) -> SinkhornState:
    """
    Solve on the max-normalized cost, switching to the log-domain solver if K underflows.

    The returned state carries the original cost and the normalizing ``scale``,
    so ``transport_cost`` is in the caller's units while ``eta`` stays relative.
    """
    original = as_cost(cost)
    normalized = original.normalized()
    if log_domain:
        state = log_domain_sinkhorn(normalized, p, q, eta, tol, max_iter)
    else:
        try:
            state = sinkhorn(normalized, p, q, eta, tol, max_iter)
        except EtaTooSmallError as e:
            logger.warning(f"{e}; retrying in the log domain")
            state = log_domain_sinkhorn(normalized, p, q, eta, tol, max_iter)
    if normalized is not original:
        state.scale = float(original.values.max())
        state.cost = original.values
    return state
