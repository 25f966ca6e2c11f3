import math
import pytest
import torch

from cpinn import (BENCHMARKS, Bounds, Closure, LossWeights, ProblemError, empirical_loss, load_problem,
                   make_problem, manufacture_problem, sine_product, verify_manufactured, Hypercube, PdeSpec)


@pytest.mark.parametrize("name", list(BENCHMARKS))
def test_benchmarks_are_consistent(name):
    report = verify_manufactured(load_problem(name), grid_n=1000)
    assert report.passed, report
    assert max(report.max_state_residual, report.max_adjoint_residual, report.max_optimality_gap) <= 1e-8


@pytest.mark.parametrize("name", list(BENCHMARKS))
def test_exact_solution_annihilates_the_loss(name):
    problem = load_problem(name)
    interior = problem.domain.sample_interior(2000, 1)
    boundary = problem.domain.sample_boundary(500, 1)
    x = interior.points
    scale = 1 + float(problem.f(x).abs().max()) + float(problem.y_d(x).abs().max())
    loss = empirical_loss(problem, problem.exact_y, problem.exact_p, interior, boundary,
                          LossWeights.default(problem.lam, 5.0))
    assert float(loss.total) <= 1e-16 * scale ** 2


def test_published_data():
    assert verify_manufactured(load_problem("ex2_annulus_box"), published=True).passed
    assert not verify_manufactured(load_problem("ex1_annulus"), published=True).passed
    assert not verify_manufactured(load_problem("ex3_hypercube4"), published=True).passed


def test_box_constrained_control_stays_in_bounds():
    problem = load_problem("ex2_annulus_box")
    u = problem.exact_u(problem.domain.sample_interior(5000, 2).points)
    assert float(u.min()) == -0.5
    assert float(u.max()) == 0.7


def test_semilinear_adjoint_boundary_data():
    problem = load_problem("ex4_semilinear")
    x = torch.tensor([[1.0, 0.25], [0.0, 0.5], [0.5, 0.0]], dtype=torch.float64)
    g_p = problem.g_adjoint(x)
    assert abs(float(g_p[0])) > 0.1
    assert g_p[1:].abs().max() == 0
    assert problem.pde.c0 == 1.0
    assert problem.lam == 0.01


def test_unknown_problem():
    with pytest.raises(ProblemError, match="ex1_annulus, ex2_annulus_box"):
        load_problem("ex9")


def test_invalid_bounds():
    with pytest.raises(ProblemError):
        Bounds(1.0, 1.0)


def test_missing_laplacian():
    y_bar = Closure(lambda x: torch.sin(math.pi * x).prod(-1))
    with pytest.raises(ProblemError, match="fd_fallback"):
        manufacture_problem("fd", y_bar, sine_product(2), 0.1, Hypercube(2))
    problem = manufacture_problem("fd", y_bar, sine_product(2), 0.1, Hypercube(2), fd_fallback=True)
    report = verify_manufactured(problem)
    assert report.tolerance == 1e-5
    assert report.passed


def test_fd_laplacian_is_accurate():
    closure = Closure(lambda x: torch.sin(math.pi * x).prod(-1), fd=True)
    x = Hypercube(2).sample_interior(50, 1).points
    expected = sine_product(2).lap(x)
    assert torch.allclose(closure.lap(x), expected, atol=1e-4)


def test_closure_evaluate():
    field = sine_product(2, 2.0).evaluate(torch.tensor([[0.5, 0.5]], dtype=torch.float64))
    assert float(field.value[0]) == pytest.approx(2.0)
    assert field.gradient.abs().max() < 1e-12
    assert float(field.laplacian[0]) == pytest.approx(-4 * math.pi ** 2)


def test_inline_families():
    problem = make_problem({"family": "sine_product", "name": "box", "dim": 3, "coef": 3.0, "lam": 0.1,
                            "bounds": [-1.0, 1.0]})
    assert problem.name == "box"
    assert problem.domain.dim == 3
    assert problem.constrained
    assert verify_manufactured(problem).passed

    problem = make_problem({"family": "annulus_quadratic", "r_in": 0.5, "r_out": 2.0, "coef": -1.0})
    assert problem.domain.measures()[0] == pytest.approx(math.pi * 3.75)
    assert verify_manufactured(problem).passed


@pytest.mark.parametrize("definition,match", [({"family": "disk"}, "unknown problem family"),
                                              ({"family": "sine_product", "radius": 1}, "radius")])
def test_invalid_inline_definitions(definition, match):
    with pytest.raises(ProblemError, match=match):
        make_problem(definition)


def test_pde_spec_reaction_terms():
    x = torch.rand(5, 2, dtype=torch.float64)
    y = torch.rand(5, dtype=torch.float64)
    linear = PdeSpec(c0=1.0)
    assert torch.equal(linear.q_of(x, y), torch.zeros(5, dtype=torch.float64))
    assert torch.equal(linear.dq_of(x, y), torch.zeros(5, dtype=torch.float64))
    cubic = PdeSpec(1.0, lambda x, y: y ** 3, lambda x, y: 3 * y ** 2)
    assert torch.allclose(cubic.q_of(x, y), y ** 3)
    assert torch.allclose(cubic.dq_of(x, y), 3 * y ** 2)
