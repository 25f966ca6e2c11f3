import torch

from cpinn import (ActivationKind, Mlp, bound_certificate, bound_suite, derivative_suite, init_mlp,
                   second_derivative_lipschitz, width_products)


def test_width_products():
    assert width_products([2, 30, 30, 1]) == [2.0, 30.0, 900.0, 900.0]


def test_output_bound_is_tight_for_affine_net():
    net = Mlp((2, 1), ActivationKind.TANH, torch.ones(3, dtype=torch.float64))
    cert = bound_certificate(net)
    assert cert.output_bound == 3.0
    assert float(net(torch.ones(2, dtype=torch.float64))) == cert.output_bound


def test_effective_bound_covers_parameters():
    net = init_mlp([2, 4, 1], "tanh", 0, bound=0.1)
    theta = net.theta.clone()
    theta[0] = 5.0
    cert = bound_certificate(net.with_theta(theta))
    assert cert.R == 0.1
    assert cert.R_effective == 5.0


def test_bounds_grow_with_depth():
    cert = bound_certificate(init_mlp([2, 10, 10, 10, 1], "sigmoid", 0, bound=1.0))
    assert cert.grad_bounds == sorted(cert.grad_bounds)
    assert cert.second_bounds == sorted(cert.second_bounds)
    assert cert.lipschitz_constant > 0


def test_lipschitz_of_identical_nets_is_zero():
    net = init_mlp([2, 4, 1], "tanh", 0)
    assert second_derivative_lipschitz(net, net) == 0.0


def test_bound_suite_has_no_violations():
    for result in bound_suite(n_pairs=150, seed=3):
        assert result.passed, result


def test_derivative_suite_passes():
    for result in derivative_suite(n_nets=8, n_coordinates=10, seed=1):
        assert result.passed, result
