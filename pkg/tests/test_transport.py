"""Tests for cost matrices, Sinkhorn solvers, the exact oracle and the alignment loss."""

import logging
from types import SimpleNamespace

import numpy as np
import pytest

from sqlab.autodiff import Tensor
from sqlab.exceptions import (
    DimensionError,
    EtaTooSmallError,
    InvalidMarginalError,
    TransportSolveError,
)
from sqlab.transport import (
    CostMatrix,
    check_marginals,
    exact_ot,
    log_domain_sinkhorn,
    ot_loss,
    pairwise_cost,
    pairwise_distance,
    sinkhorn,
    solve,
    uniform_marginal,
)
from tests.helpers import numerical_gradient


def _random_instance(rng: np.random.Generator) -> tuple[CostMatrix, np.ndarray, np.ndarray]:
    n, m = rng.integers(2, 7, size=2)
    cost = CostMatrix(rng.uniform(size=(n, m))).normalized()
    p = rng.dirichlet(np.ones(n))
    q = rng.dirichlet(np.ones(m))
    return cost, p, q


def test_cost_matrix_validation() -> None:
    """Test construction checks and normalization."""
    with pytest.raises(ValueError, match="negative"):
        CostMatrix(np.array([[1.0, -0.1]]))
    with pytest.raises(DimensionError):
        CostMatrix(np.ones(3))
    with pytest.raises(ValueError, match=r"\[0, 2\]"):
        CostMatrix(np.array([[2.5]]), metric="cosine")

    normalized = CostMatrix(np.array([[2.0, 4.0]])).normalized()
    np.testing.assert_allclose(normalized.values, [[0.5, 1.0]])
    zeros = CostMatrix(np.zeros((2, 2)))
    assert zeros.normalized() is zeros


def test_pairwise_cost_metrics(rng: np.random.Generator) -> None:
    """Test euclidean and cosine costs between feature rows."""
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(5, 4))

    euclid = pairwise_cost(a, b, "euclidean")
    cosine = pairwise_cost(a, b, "cosine")

    assert euclid.shape == (3, 5)
    assert euclid.values[1, 2] == pytest.approx(np.linalg.norm(a[1] - b[2]))
    assert np.all((cosine.values >= 0) & (cosine.values <= 2))
    assert pairwise_cost(a, -a, "cosine").values[0, 0] == pytest.approx(2.0)
    with pytest.raises(DimensionError):
        pairwise_cost(a, rng.normal(size=(2, 3)))


def test_check_marginals() -> None:
    """Test simplex validation of the marginals."""
    p, q = check_marginals(uniform_marginal(2), uniform_marginal(3), (2, 3))
    assert p.sum() == pytest.approx(1.0)

    with pytest.raises(InvalidMarginalError, match="marginal p"):
        check_marginals(np.array([0.6, 0.6]), uniform_marginal(3), (2, 3))
    with pytest.raises(InvalidMarginalError, match="marginal q"):
        check_marginals(uniform_marginal(2), np.array([1.2, -0.1, -0.1]), (2, 3))
    with pytest.raises(DimensionError):
        check_marginals(uniform_marginal(3), uniform_marginal(3), (2, 3))


def test_sinkhorn_plan_satisfies_marginals(rng: np.random.Generator) -> None:
    """Test that a converged plan matches both marginals."""
    for _ in range(100):
        cost, p, q = _random_instance(rng)
        state = sinkhorn(cost, p, q, eta=0.05, tol=1e-9, max_iter=20000)

        assert state.converged
        assert state.plan.marginal_error() <= 1e-6
        assert np.all(state.coupling >= 0)


def test_exact_ot_reports_solver_failure(monkeypatch: pytest.MonkeyPatch) -> None:
    """Test that an LP failure surfaces as a package error."""
    failed = SimpleNamespace(success=False, message="infeasible")
    monkeypatch.setattr("sqlab.transport.exact.linprog", lambda *args, **kwargs: failed)

    with pytest.raises(TransportSolveError, match="infeasible"):
        exact_ot(np.ones((2, 2)), uniform_marginal(2), uniform_marginal(2))


def test_sinkhorn_bounded_by_exact_value(rng: np.random.Generator) -> None:
    """Test 0 <= <gamma, C> - OT <= eta * log(n m) on random instances."""
    for _ in range(50):
        cost, p, q = _random_instance(rng)
        exact, _ = exact_ot(cost, p, q)
        state = sinkhorn(cost, p, q, eta=0.05, tol=1e-10, max_iter=50000)
        n, m = cost.shape

        gap = state.transport_cost - exact
        assert gap >= -1e-6
        assert gap <= 0.05 * np.log(n * m) + 1e-6


@pytest.mark.slow
def test_sinkhorn_small_eta_matches_exact_value(rng: np.random.Generator) -> None:
    """Test that eta = 0.005 lands within 2% of the linear-program optimum."""
    for _ in range(50):
        n, m = rng.integers(2, 7, size=2)
        cost = CostMatrix(rng.uniform(size=(n, m))).normalized()
        p, q = uniform_marginal(n), uniform_marginal(m)
        exact, _ = exact_ot(cost, p, q)
        state = solve(cost, p, q, eta=0.005, tol=1e-9, max_iter=200000)

        assert state.plan.marginal_error() <= 1e-6
        assert abs(state.transport_cost - exact) <= 0.02 * exact + 1e-9


def test_row_violation_never_grows(rng: np.random.Generator) -> None:
    """Test that the L1 row violation is non-increasing across iterations."""
    for _ in range(100):
        cost, p, q = _random_instance(rng)
        state = sinkhorn(cost, p, q, eta=0.05, tol=1e-12, max_iter=300)
        history = np.asarray(state.error_history)

        assert np.all(np.diff(history) <= 1e-12)


def test_log_domain_matches_plain_solver(rng: np.random.Generator) -> None:
    """Test that both solvers reach the same plan where both converge."""
    for _ in range(20):
        cost, p, q = _random_instance(rng)
        plain = sinkhorn(cost, p, q, eta=0.1, tol=1e-12, max_iter=20000)
        stable = log_domain_sinkhorn(cost, p, q, eta=0.1, tol=1e-12, max_iter=20000)

        np.testing.assert_allclose(plain.coupling, stable.coupling, atol=1e-8)


def test_small_eta_underflow_falls_back_to_log_domain(caplog: pytest.LogCaptureFixture) -> None:
    """Test that a dead Gibbs row raises in the plain solver and solve() recovers."""
    cost = np.array([[1.0, 1.0, 0.9], [0.0, 0.5, 1.0], [0.3, 0.0, 0.2]])
    p = q = uniform_marginal(3)

    with pytest.raises(EtaTooSmallError) as excinfo:
        sinkhorn(cost, p, q, eta=1e-4)
    assert excinfo.value.row == 0

    with caplog.at_level(logging.WARNING):
        state = solve(cost, p, q, eta=1e-4, tol=1e-9, max_iter=5000)
    assert "log domain" in caplog.text
    assert np.all(np.isfinite(state.coupling))
    assert state.plan.marginal_error() <= 1e-6


def test_solve_is_invariant_to_cost_scale(rng: np.random.Generator) -> None:
    """Test that scaling the cost rescales the value and leaves the plan unchanged."""
    for _ in range(10):
        cost, p, q = _random_instance(rng)
        unit = solve(cost, p, q, eta=0.05, tol=1e-10, max_iter=20000)
        scaled = solve(50.0 * cost.values, p, q, eta=0.05, tol=1e-10, max_iter=20000)

        np.testing.assert_allclose(scaled.coupling, unit.coupling, atol=1e-10)
        assert scaled.scale == pytest.approx(50.0)
        assert scaled.transport_cost == pytest.approx(50.0 * unit.transport_cost)
        assert scaled.entropic_objective == pytest.approx(50.0 * unit.entropic_objective)


def test_max_iter_flags_without_raising(caplog: pytest.LogCaptureFixture) -> None:
    """Test the iteration cap."""
    rng = np.random.default_rng(1)
    cost = rng.uniform(size=(5, 5))

    with caplog.at_level(logging.WARNING):
        state = sinkhorn(cost, uniform_marginal(5), uniform_marginal(5), eta=0.01, max_iter=2)

    assert state.iterations == 2
    assert not state.converged
    assert "max_iter" in caplog.text


def test_entropic_objective_and_entropy(rng: np.random.Generator) -> None:
    """Test the derived quantities of a solver state."""
    cost, p, q = _random_instance(rng)
    state = sinkhorn(cost, p, q, eta=0.2, tol=1e-10, max_iter=10000)
    gamma = state.coupling

    assert state.entropy == pytest.approx(-np.sum(gamma * np.log(gamma)))
    assert state.entropic_objective == pytest.approx(
        state.transport_cost - 0.2 * state.entropy
    )
    assert state.plan.cost(cost) == pytest.approx(state.transport_cost)


def test_solver_rejects_bad_arguments() -> None:
    """Test eta, tol and marginal validation."""
    p = q = uniform_marginal(2)
    with pytest.raises(ValueError, match="eta"):
        sinkhorn(np.ones((2, 2)), p, q, eta=0.0)
    with pytest.raises(ValueError, match="tol"):
        log_domain_sinkhorn(np.ones((2, 2)), p, q, tol=-1.0)
    with pytest.raises(InvalidMarginalError):
        solve(np.ones((2, 2)), np.array([0.9, 0.9]), q)


def test_exact_ot_on_permutation_cost() -> None:
    """Test the oracle on an instance with a known optimum."""
    cost = 1.0 - np.eye(3)
    value, plan = exact_ot(cost, uniform_marginal(3), uniform_marginal(3))

    assert value == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(plan.coupling, np.eye(3) / 3, atol=1e-9)
    with pytest.raises(DimensionError, match="limited"):
        exact_ot(np.ones((9, 9)), uniform_marginal(9), uniform_marginal(9))


@pytest.mark.parametrize("metric", ["euclidean", "cosine"])
def test_ot_loss_gradient_matches_finite_differences(
    metric: str, rng: np.random.Generator
) -> None:
    """Test alignment-loss gradients w.r.t. trainable features with a fixed plan."""
    for _ in range(20):
        t_data = rng.normal(size=(3, 4))
        f = rng.normal(size=(5, 4))
        plan = rng.dirichlet(np.ones(15)).reshape(3, 5)
        t = Tensor.parameter(t_data)
        ot_loss(t, f, plan, metric).backward()

        expected = numerical_gradient(
            lambda x: ot_loss(Tensor(x), f, plan, metric).item(), t_data
        )
        np.testing.assert_allclose(t.grad, expected, rtol=1e-5, atol=1e-8)


def test_ot_loss_values(rng: np.random.Generator) -> None:
    """Test values of the alignment loss and its shape checks."""
    f = rng.normal(size=(3, 4))
    identity_plan = np.eye(3) / 3

    assert ot_loss(Tensor(f), f, identity_plan, "euclidean").item() == pytest.approx(0.0)
    assert ot_loss(Tensor(2.0 * f), f, identity_plan, "cosine").item() == pytest.approx(
        0.0, abs=1e-12
    )
    with pytest.raises(DimensionError, match="plan shape"):
        ot_loss(Tensor(f), f, np.ones((2, 3)) / 6, "euclidean")


def test_pairwise_distance_treats_frozen_side_as_constant(rng: np.random.Generator) -> None:
    """Test that gradients only reach the trainable features."""
    t = Tensor.parameter(rng.normal(size=(2, 3)))
    f = Tensor.parameter(rng.normal(size=(4, 3)))
    dist = pairwise_distance(t, f, "cosine")
    dist.backward(np.ones(dist.shape))

    assert dist.shape == (2, 4)
    assert t.grad is not None
    assert f.grad is None
    with pytest.raises(ValueError, match="zero-norm"):
        pairwise_distance(Tensor(np.zeros((1, 3))), f.data, "cosine")
