import math
import pytest
import torch

from cpinn import (AdamState, LbfgsState, OptimizerError, adam_step, lbfgs_minimize, minimize_adam)
from cpinn.optim import _cubic_interpolate


def quadratic(center, scales):
    def loss_and_grad(theta):
        r = theta - center
        return float(0.5 * (scales * r * r).sum()), scales * r
    return loss_and_grad


def rosenbrock(theta):
    x, y = float(theta[0]), float(theta[1])
    loss = (1 - x) ** 2 + 100 * (y - x * x) ** 2
    grad = torch.tensor([-2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x)], dtype=torch.float64)
    return loss, grad


def test_adam_first_step_has_length_lr():
    theta = torch.tensor([1.0, -2.0], dtype=torch.float64)
    grad = torch.tensor([0.3, -5.0], dtype=torch.float64)
    state, theta1 = adam_step(AdamState.zeros_like(theta, lr=0.01), theta, grad)
    assert state.step == 1
    assert torch.allclose(theta1, theta - 0.01 * grad.sign(), rtol=1e-6)


def test_adam_milestones():
    state = AdamState.zeros_like(torch.zeros(1), lr=1.0, milestones=(10, 5))
    assert state.current_lr() == 1.0
    assert AdamState(state.m, state.v, 4, 1.0, (5, 10)).current_lr() == 1.0
    assert AdamState(state.m, state.v, 5, 1.0, (5, 10)).current_lr() == pytest.approx(0.1)
    assert AdamState(state.m, state.v, 12, 1.0, (5, 10)).current_lr() == pytest.approx(0.01)


def test_adam_rejects_non_finite_gradients():
    theta = torch.zeros(2, dtype=torch.float64)
    with pytest.raises(OptimizerError) as error:
        adam_step(AdamState.zeros_like(theta), theta, torch.tensor([1.0, math.nan], dtype=torch.float64))
    assert error.value.iteration == 0


def test_adam_decreases_a_quadratic():
    fg = quadratic(torch.tensor([1.0, 2.0], dtype=torch.float64), torch.tensor([1.0, 10.0], dtype=torch.float64))
    calls = []
    theta, trace = minimize_adam(fg, torch.zeros(2, dtype=torch.float64), 500, lr=0.05,
                             callback=lambda k, theta, loss: calls.append(k))
    assert len(trace) == 501
    assert calls == list(range(501))
    assert trace.losses[-1] < 1e-2 * trace.losses[0]


def test_lbfgs_solves_a_quadratic():
    scales = torch.logspace(0, 2, 10, dtype=torch.float64)
    center = torch.linspace(-1, 1, 10, dtype=torch.float64)
    theta, trace = lbfgs_minimize(quadratic(center, scales), torch.zeros(10, dtype=torch.float64), 100)
    assert trace.status == "converged"
    assert torch.allclose(theta, center, atol=1e-9)


def test_lbfgs_solves_an_isotropic_quadratic():
    center = torch.tensor([0.5, -2.0, 3.0], dtype=torch.float64)
    theta, trace = lbfgs_minimize(quadratic(center, torch.ones(3, dtype=torch.float64)),
                                  torch.zeros(3, dtype=torch.float64), 50)
    assert trace.status == "converged"
    assert len(trace) - 1 <= 2
    assert trace.rows[-1]["grad_norm"] <= 1e-12
    assert torch.allclose(theta, center, atol=1e-12)


def test_lbfgs_solves_rosenbrock():
    theta, trace = lbfgs_minimize(rosenbrock, torch.tensor([-1.2, 1.0], dtype=torch.float64), 200)
    assert len(trace) - 1 <= 200
    assert float((theta - 1).abs().max()) <= 1e-8
    losses = trace.losses
    assert all(b <= a for a, b in zip(losses, losses[1:]))
    assert all(row["armijo"] and row["curvature"] for row in trace.rows)


def test_lbfgs_zero_budget():
    theta0 = torch.tensor([-1.2, 1.0], dtype=torch.float64)
    theta, trace = lbfgs_minimize(rosenbrock, theta0, 0)
    assert torch.equal(theta, theta0)
    assert len(trace) == 1


def test_lbfgs_rejects_a_non_finite_start():
    with pytest.raises(OptimizerError):
        lbfgs_minimize(lambda theta: (math.nan, torch.zeros_like(theta)), torch.zeros(2, dtype=torch.float64), 10)


def test_lbfgs_steps_back_from_infinite_losses():
    def fg(theta):
        if float(theta[0]) > 2:
            return math.inf, torch.full_like(theta, math.nan)
        return float((theta[0] - 3) ** 2), 2 * (theta - 3)

    theta, trace = lbfgs_minimize(fg, torch.zeros(1, dtype=torch.float64), 50)
    assert float(theta[0]) <= 2
    assert all(math.isfinite(loss) for loss in trace.losses)
    assert trace.losses[-1] < 4


def test_curvature_pairs():
    state = LbfgsState(m=2)
    s = torch.tensor([1.0, 0.0], dtype=torch.float64)
    assert not state.store(s, torch.tensor([-1.0, 0.0], dtype=torch.float64))
    assert state.store(s, torch.tensor([2.0, 0.0], dtype=torch.float64))
    for _ in range(3):
        state.store(s, torch.tensor([2.0, 1.0], dtype=torch.float64))
    assert len(state.history) == 2

    g = torch.tensor([0.5, -1.0], dtype=torch.float64)
    assert torch.equal(LbfgsState().direction(g), -g)


def test_cubic_interpolation_of_a_quadratic():
    # f = (x − 0.3)², f' = 2(x − 0.3)
    assert _cubic_interpolate(0.0, 0.09, -0.6, 1.0, 0.49, 1.4) == pytest.approx(0.3)
