import torch

import cpinn
from cpinn import bound_suite, derivative_suite, fd_net_gradient, fd_net_laplacian, init_mlp


def test_finite_differences_match_forward_propagation():
    net = init_mlp([2, 4, 1], "tanh", seed=1)
    x = torch.tensor([[0.3, -0.2], [0.1, 0.5]], dtype=torch.float64)
    fe = net.evaluate(x)
    assert torch.allclose(fd_net_gradient(net, x), fe.gradient, atol=1e-9)
    assert torch.allclose(fd_net_laplacian(net, x), fe.laplacian, atol=1e-6)


def test_derivative_suite_passes():
    results = derivative_suite(n_nets=6, n_points=4, n_coordinates=10, seed=3)
    assert [r.name for r in results] == ["gradient", "laplacian", "param_gradient"]
    for result in results:
        assert result.cases == 6
        assert result.passed, result


def test_bound_suite_passes():
    results = bound_suite(n_pairs=40, n_points=8, seed=3)
    assert {r.name for r in results} == {"values", "gradients", "second", "laplacian", "lipschitz"}
    for result in results:
        assert result.passed, result
        assert result.worst <= 1.0 + 1e-9


def test_run_selftest_logs_every_property(caplog):
    with caplog.at_level("INFO", logger="cpinn.selftest"):
        assert cpinn.run_selftest(n_nets=2, n_pairs=4, seed=1)
    assert len(caplog.records) == 8
