import pytest
import torch

from cpinn import (LossWeights, ProblemError, ShapeError, adjoint_pinn_loss, cpinn_loss_and_grad,
                   empirical_loss, forward_pinn_loss, init_mlp, objective_J, project_control,
                   smooth_project_control, state_residual)


def nets(problem, seed=0):
    widths = [problem.domain.dim, 8, 8, 1]
    return init_mlp(widths, "tanh", seed), init_mlp(widths, "tanh", seed + 1)


def test_project_control():
    v = torch.tensor([-2.0, 0.1, 3.0], dtype=torch.float64)
    assert project_control(v, -0.5, 0.7).tolist() == [-0.5, 0.1, 0.7]
    assert project_control(1.5, -0.5, 0.7) == 0.7
    with pytest.raises(ProblemError):
        project_control(v, 1.0, 1.0)


def test_smooth_projection_approaches_the_clamp():
    v = torch.linspace(-2, 2, 401, dtype=torch.float64)
    smooth = smooth_project_control(v, -0.5, 0.7, tau=1e-3)
    assert float((smooth - project_control(v, -0.5, 0.7)).abs().max()) <= 1e-3 * 0.7


def test_loss_weights():
    weights = LossWeights.default(0.01, 5.0)
    assert weights.alpha_i == pytest.approx(100.0)
    assert weights.alpha_b_p == pytest.approx(500.0)
    assert weights.scale_boundary_y(2.0).alpha_b_y == 10.0
    with pytest.raises(ValueError):
        LossWeights(1.0, 0.0, 1.0)


def test_empty_sample_sets(ex1):
    y, p = nets(ex1)
    interior = ex1.domain.sample_interior(0, 1)
    boundary = ex1.domain.sample_boundary(10, 1)
    with pytest.raises(ShapeError, match="interior"):
        empirical_loss(ex1, y, p, interior, boundary, LossWeights.default(ex1.lam, 5.0))


def test_breakdown_sums_to_total(ex2):
    y, p = nets(ex2)
    loss = empirical_loss(ex2, y, p, ex2.domain.sample_interior(300, 1), ex2.domain.sample_boundary(100, 1),
                          LossWeights.default(ex2.lam, 5.0))
    terms = loss.as_floats()
    assert terms["loss_total"] == pytest.approx(terms["loss_state_res"] + terms["loss_adj_res"]
                                                + terms["loss_bdry_y"] + terms["loss_bdry_p"])
    assert all(value >= 0 for value in terms.values())


def test_loss_gradient_matches_finite_differences(ex2):
    y, p = nets(ex2)
    interior, boundary = ex2.domain.sample_interior(200, 1), ex2.domain.sample_boundary(60, 1)
    weights = LossWeights.default(ex2.lam, 5.0)
    breakdown, g_theta, g_sigma = cpinn_loss_and_grad(ex2, y, p, interior, boundary, weights)
    assert float(breakdown.total) == pytest.approx(float(empirical_loss(ex2, y, p, interior, boundary, weights).total))

    direction = torch.randn(y.num_params + p.num_params, dtype=torch.float64,
                            generator=torch.Generator().manual_seed(0))
    d_theta, d_sigma = direction[:y.num_params], direction[y.num_params:]
    h = 1e-6

    def total(t):
        return float(empirical_loss(ex2, y.with_theta(y.theta + t * d_theta), p.with_theta(p.theta + t * d_sigma),
                                    interior, boundary, weights).total)

    fd = (total(h) - total(-h)) / (2 * h)
    assert float(g_theta @ d_theta + g_sigma @ d_sigma) == pytest.approx(fd, rel=1e-5)


def test_forward_and_adjoint_losses_vanish_at_the_exact_solution(ex1):
    interior, boundary = ex1.domain.sample_interior(500, 1), ex1.domain.sample_boundary(100, 1)
    assert float(forward_pinn_loss(ex1, ex1.exact_y, ex1.exact_u, interior, boundary, 5.0)) < 1e-24
    y = ex1.exact_y(interior.points)
    assert float(adjoint_pinn_loss(ex1, ex1.exact_p, y, interior, boundary, 5.0)) < 1e-24


def test_value_tensor_shape_is_checked(ex1):
    y, _ = nets(ex1)
    interior, boundary = ex1.domain.sample_interior(50, 1), ex1.domain.sample_boundary(10, 1)
    with pytest.raises(ShapeError):
        forward_pinn_loss(ex1, y, torch.zeros(49, dtype=torch.float64), interior, boundary, 5.0)


def test_objective(ex1):
    interior = ex1.domain.sample_interior(1000, 1)
    zero = torch.zeros(1000, dtype=torch.float64)
    J = objective_J(ex1.y_d, zero, interior, ex1.y_d, ex1.lam)
    assert float(J) == 0.0
    u = torch.ones(1000, dtype=torch.float64)
    J = objective_J(ex1.y_d, u, interior, ex1.y_d, ex1.lam)
    assert float(J) == pytest.approx(0.5 * ex1.lam * interior.support_measure)


def test_state_residual_sign(ex1):
    x = ex1.domain.sample_interior(20, 1).points
    r = state_residual(ex1, ex1.exact_y.evaluate(x), ex1.exact_u(x), x)
    assert float(r.abs().max()) < 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_training_and_independent_draws_agree(ex1, seed):
    y, p = nets(ex1, seed)
    n = 2000
    means, variances = [], []
    for draw in (seed, seed + 1000):
        interior = ex1.domain.sample_interior(n, draw)
        x = interior.points
        r = state_residual(ex1, y.evaluate(x), ex1.recover_control(p(x)), x).detach()
        population = interior.support_measure * r * r
        means.append(float(population.mean()))
        variances.append(float(population.var()))
    standard_error = ((variances[0] + variances[1]) / n) ** 0.5
    assert abs(means[0] - means[1]) <= 5 * standard_error
