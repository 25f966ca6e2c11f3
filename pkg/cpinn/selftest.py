"""Property suites run by `python -m scripts.selftest`.

The derivative suite compares the forward propagation of gradients and
Laplacians with central finite differences; the bound suite samples random
network pairs and counts violations of the certificate bounds."""

import dataclasses
import logging
import torch

import utils
from .activation import ActivationKind
from .certificate import bound_certificate, second_derivative_lipschitz
from .mlp import Mlp, eval_field, init_mlp, layer_jets, param_count, param_gradient

logger = logging.getLogger(__name__)

HIDDEN_CHOICES = [(2,), (5,), (10, 10), (30, 30), (8, 8, 8)]
BOUND_CHOICES = [0.5, 1.0, 2.0]


@dataclasses.dataclass
class SuiteResult:
    name: str
    cases: int
    failures: int
    worst: float
    tolerance: float

    @property
    def passed(self):
        return self.failures == 0


def _random_widths(rng):
    dim = int(rng.integers(1, 5))
    hidden = HIDDEN_CHOICES[int(rng.integers(len(HIDDEN_CHOICES)))]
    return [dim, *hidden, 1]


def _richardson(f, x, h):
    """Central difference of order four: (4·D(h/2) − D(h)) / 3."""
    return (4 * f(x, h / 2) - f(x, h)) / 3


def fd_net_gradient(net, x, h=1e-3):
    def D(x, h):
        columns = []
        for p in range(x.shape[1]):
            e = torch.zeros_like(x)
            e[:, p] = h
            columns.append((net(x + e) - net(x - e)) / (2 * h))
        return torch.stack(columns, dim=1)

    return _richardson(D, x, h)


def fd_net_laplacian(net, x, h=1e-2):
    def D(x, h):
        total = torch.zeros(x.shape[0], dtype=x.dtype)
        for p in range(x.shape[1]):
            e = torch.zeros_like(x)
            e[:, p] = h
            total += (net(x + e) - 2 * net(x) + net(x - e)) / h ** 2
        return total

    return _richardson(D, x, h)


def _relative(a, b):
    scale = max(float(b.abs().max()), 1e-12)
    return float((a - b).abs().max()) / scale


def derivative_suite(n_nets=100, n_points=16, n_coordinates=40, seed=0, tol=1e-6, tol_param=1e-5):
    """Gradient and Laplacian against finite differences on `n_nets` random
    networks; param_gradient against finite differences in θ on a random
    subset of `n_coordinates` coordinates per network."""

    rng = utils.make_rng(seed, utils.STREAM_DERIVATIVES)
    results = {"gradient": [], "laplacian": [], "param_gradient": []}
    for i in range(n_nets):
        widths = _random_widths(rng)
        kind = list(ActivationKind)[i % 2]
        net = init_mlp(widths, kind, seed * 100003 + i)
        net = net.with_theta(net.theta + 0.1 * torch.from_numpy(rng.standard_normal(net.num_params)))
        x = torch.from_numpy(rng.uniform(-1, 1, size=(n_points, widths[0])))

        fe = eval_field(net, x)
        results["gradient"].append(_relative(fe.gradient, fd_net_gradient(net, x)))
        results["laplacian"].append(_relative(fe.laplacian, fd_net_laplacian(net, x)))

        w_v = torch.from_numpy(rng.standard_normal(n_points))
        w_g = torch.from_numpy(rng.standard_normal((n_points, widths[0])))
        w_lap = torch.from_numpy(rng.standard_normal(n_points))
        grad = param_gradient(net, x, (w_v, w_g, w_lap))

        def scalar(theta):
            fe = eval_field(net.with_theta(theta), x)
            return float((w_v * fe.value).sum() + (w_g * fe.gradient).sum() + (w_lap * fe.laplacian).sum())

        coordinates = rng.choice(net.num_params, size=min(n_coordinates, net.num_params), replace=False)
        h = 1e-5
        fd = torch.zeros(len(coordinates), dtype=torch.float64)
        for j, c in enumerate(coordinates):
            e = torch.zeros_like(net.theta)
            e[c] = h
            fd[j] = (scalar(net.theta + e) - scalar(net.theta - e)) / (2 * h)
        results["param_gradient"].append(_relative(grad[torch.from_numpy(coordinates)], fd))

    suites = []
    for name, errors in results.items():
        bound = tol_param if name == "param_gradient" else tol
        suites.append(SuiteResult(name, len(errors), sum(e > bound for e in errors), max(errors), bound))
    return suites


def _uniform_net(rng, widths, kind, R):
    theta = torch.from_numpy(rng.uniform(-R, R, size=param_count(widths)))
    return Mlp(tuple(widths), kind, theta, R)


def bound_suite(n_pairs=1000, n_points=32, seed=0, slack=1e-9):
    """Count sampled values and derivatives exceeding the certificate, layer by
    layer, and second-derivative differences exceeding the Lipschitz bound."""

    rng = utils.make_rng(seed, utils.STREAM_BOUNDS)
    failures = {"values": 0, "gradients": 0, "second": 0, "laplacian": 0, "lipschitz": 0}
    worst = {name: 0.0 for name in failures}
    for i in range(n_pairs):
        widths = _random_widths(rng)
        kind = list(ActivationKind)[i % 2]
        R = BOUND_CHOICES[int(rng.integers(len(BOUND_CHOICES)))]
        net, other = _uniform_net(rng, widths, kind, R), _uniform_net(rng, widths, kind, R)
        cert = bound_certificate(net)
        x = torch.from_numpy(rng.uniform(-1, 1, size=(n_points, widths[0])))

        with torch.no_grad():
            jets = layer_jets(net, x)
            for ell, (h, J, S) in enumerate(jets):
                for name, sampled, bound in (("values", h, cert.value_bounds[ell]),
                                             ("gradients", J, cert.grad_bounds[ell]),
                                             ("second", S, cert.second_bounds[ell])):
                    ratio = float(sampled.abs().max()) / bound if bound > 0 else float(sampled.abs().max() > 0)
                    worst[name] = max(worst[name], ratio)
                    failures[name] += ratio > 1 + slack
            laplacian = float(eval_field(net, x).laplacian.abs().max())
            ratio = laplacian / cert.laplacian_bound
            worst["laplacian"] = max(worst["laplacian"], ratio)
            failures["laplacian"] += ratio > 1 + slack

            S, S_other = jets[-1][2][:, 0, :], layer_jets(other, x)[-1][2][:, 0, :]
            difference = float((S - S_other).abs().max())
            bound = second_derivative_lipschitz(net, other)
            ratio = difference / bound if bound > 0 else float(difference > 0)
            worst["lipschitz"] = max(worst["lipschitz"], ratio)
            failures["lipschitz"] += ratio > 1 + slack

    return [SuiteResult(name, n_pairs, failures[name], worst[name], 1.0) for name in failures]


def run_selftest(n_nets=100, n_pairs=1000, seed=0):
    """Run both suites, log one line per property and return True if all pass."""
    passed = True
    for result in derivative_suite(n_nets, seed=seed) + bound_suite(n_pairs, seed=seed):
        logger.info("{:<15} | cases {} | failures {} | worst {:.3e} | tol {:.0e}".format(
            result.name, result.cases, result.failures, result.worst, result.tolerance))
        passed = passed and result.passed
    return passed
