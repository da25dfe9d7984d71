"""Exact optimal transport for oracle-sized instances."""

import numpy as np
from scipy.optimize import linprog

from sqlab.exceptions import DimensionError, TransportSolveError
from sqlab.transport.cost import CostMatrix, TransportPlan, as_cost, check_marginals


MAX_ORACLE_SIZE = 64


def exact_ot(
    cost: CostMatrix | np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
    max_size: int = MAX_ORACLE_SIZE,
) -> tuple[float, TransportPlan]:
    """
    Solve the transport linear program exactly.

    Args:
        cost: n x m cost matrix
        p: Row marginal (simplex vector of length n)
        q: Column marginal (simplex vector of length m)
        max_size: Largest n * m accepted

    Returns:
        Tuple of (optimal value, optimal plan)

    Raises:
        InvalidMarginalError: If p or q is off the simplex
        DimensionError: If the instance exceeds ``max_size``
        TransportSolveError: If the LP solver reports failure
    """
    cost = as_cost(cost)
    n, m = cost.shape
    if n * m > max_size:
        raise DimensionError(f"exact_ot is limited to n*m <= {max_size}, got {n}x{m}")
    p, q = check_marginals(p, q, (n, m))

    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    result = linprog(
        cost.values.reshape(-1),
        A_eq=a_eq,
        b_eq=np.concatenate([p, q]),
        bounds=(0, None),
        method="highs",
    )
    if not result.success:
        raise TransportSolveError(f"transport LP failed: {result.message}")
    coupling = np.clip(result.x.reshape(n, m), 0.0, None)
    return float(result.fun), TransportPlan(coupling, p, q)
