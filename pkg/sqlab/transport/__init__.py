"""Optimal transport: cost matrices, exact oracle, Sinkhorn solvers and the alignment loss."""

from sqlab.transport.cost import (
    CostMatrix,
    Metric,
    TransportPlan,
    as_cost,
    check_marginals,
    pairwise_cost,
    uniform_marginal,
)
from sqlab.transport.exact import exact_ot
from sqlab.transport.loss import ot_loss, pairwise_distance
from sqlab.transport.sinkhorn import SinkhornState, log_domain_sinkhorn, sinkhorn, solve


__all__ = [
    "CostMatrix",
    "Metric",
    "SinkhornState",
    "TransportPlan",
    "as_cost",
    "check_marginals",
    "exact_ot",
    "log_domain_sinkhorn",
    "ot_loss",
    "pairwise_cost",
    "pairwise_distance",
    "sinkhorn",
    "solve",
    "uniform_marginal",
]
