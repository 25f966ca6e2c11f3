import dataclasses
import math

from .activation import activation_eval


@dataclasses.dataclass(frozen=True)
class BoundCertificate:
    """Uniform bounds on a network and its input derivatives.

    Entry ℓ−1 of each list bounds layer ℓ = 1..L. `width_products[i]`
    is π_i = n_1⋯n_i, except π_0 which is taken as n_0. The derivative
    bounds hold for every input when each hidden width times R is at
    least 1; the value bound of the output layer includes its bias."""

    widths: tuple
    R: float
    R_effective: float
    width_products: list
    value_bounds: list
    grad_bounds: list
    second_bounds: list
    laplacian_bound: float
    lipschitz_constant: float

    @property
    def output_bound(self):
        return self.value_bounds[-1]


def width_products(widths):
    products = [float(widths[0])]
    prod = 1.0
    for n in widths[1:]:
        prod *= n
        products.append(prod)
    return products


def bound_certificate(net, other=None):
    """Certificate for `net`; with `other`, R_effective also covers its parameters
    so the Lipschitz constant applies to the pair."""

    thetas = [net.theta] + ([other.theta] if other is not None else [])
    theta_max = max(float(theta.detach().abs().max()) if theta.numel() else 0.0 for theta in thetas)
    R = max(float(net.bound), theta_max)
    widths = tuple(net.widths)
    L = len(widths) - 1
    products = width_products(widths)

    hidden = 1.0 if R > 0 else abs(float(activation_eval(net.activation, 0.0)[0]))
    value_bounds = [hidden] * (L - 1) + [(widths[L - 1] + 1) * R]
    grad_bounds = [products[ell - 1] * R ** ell for ell in range(1, L + 1)]
    second_bounds = [ell * products[ell - 1] ** 2 * R ** (2 * ell) for ell in range(1, L + 1)]

    n_params = sum(n_out * n_in + n_out for n_in, n_out in zip(widths[:-1], widths[1:]))
    laplacian_bound = widths[0] * L * float(n_params) ** (2 * L) * R ** (2 * L)
    lipschitz_constant = (2 * (L - 1) * L * net.activation.eta * math.sqrt(n_params)
                          * products[L - 1] ** 3 * R ** (3 * L - 3))

    return BoundCertificate(widths, float(net.bound), R, products, value_bounds, grad_bounds,
                            second_bounds, laplacian_bound, lipschitz_constant)


def second_derivative_lipschitz(net, other):
    """Bound on max_p |∂²_p f_θ − ∂²_p f_θ̃| over inputs, for the pair (net, other)."""
    cert = bound_certificate(net, other)
    return cert.lipschitz_constant * float((net.theta - other.theta).norm())
