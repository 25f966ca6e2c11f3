import dataclasses
import torch
import torch.nn.functional as F

from .errors import ProblemError, ShapeError


def project_control(v, u_a, u_b):
    """Pointwise clamp onto [u_a, u_b]; its derivative is 1 inside and 0 where clamped."""
    if not u_a < u_b:
        raise ProblemError(f"projection needs u_a < u_b, got ({u_a}, {u_b})")
    if torch.is_tensor(v):
        return torch.clamp(v, u_a, u_b)
    return min(max(v, u_a), u_b)


def smooth_project_control(v, u_a, u_b, tau=1e-2):
    """Clamp with the corners rounded by softplus over a width τ; its
    derivative is a difference of two sigmoids."""
    if not u_a < u_b:
        raise ProblemError(f"projection needs u_a < u_b, got ({u_a}, {u_b})")
    return u_a + tau * (F.softplus((v - u_a) / tau) - F.softplus((v - u_b) / tau))


@dataclasses.dataclass(frozen=True)
class LossWeights:
    alpha_i: float
    alpha_b_y: float
    alpha_b_p: float

    def __post_init__(self):
        for name in ("alpha_i", "alpha_b_y", "alpha_b_p"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def default(cls, lam, alpha_b_y):
        alpha_i = 1 / lam
        return cls(alpha_i, alpha_b_y, alpha_i * alpha_b_y)

    def scale_boundary_y(self, factor):
        return dataclasses.replace(self, alpha_b_y=self.alpha_b_y * factor)


@dataclasses.dataclass(frozen=True)
class LossBreakdown:
    state_residual_term: torch.Tensor
    adjoint_residual_term: torch.Tensor
    boundary_y_term: torch.Tensor
    boundary_p_term: torch.Tensor

    @property
    def total(self):
        return (self.state_residual_term + self.adjoint_residual_term
                + self.boundary_y_term + self.boundary_p_term)

    def as_floats(self):
        return {
            "loss_total": float(self.total),
            "loss_state_res": float(self.state_residual_term),
            "loss_adj_res": float(self.adjoint_residual_term),
            "loss_bdry_y": float(self.boundary_y_term),
            "loss_bdry_p": float(self.boundary_p_term),
        }


def _check_nonempty(samples, what):
    if len(samples) == 0:
        raise ShapeError(f"{what} sample set is empty")


def _mean_square(r, measure):
    return measure * (r * r).mean()


def recover_control(problem, p, smooth=None):
    """u = −λ⁻¹p, clamped onto the bounds (or smoothly, with width `smooth`)."""
    u = -p / problem.lam
    if problem.bounds is None:
        return u
    if smooth:
        return smooth_project_control(u, problem.bounds.lower, problem.bounds.upper, smooth)
    return problem.bounds.project(u)


def state_residual(problem, y, u, x):
    """Δy − c₀y − q(x, y) + f + u for a FieldEval y and control values u."""
    pde = problem.pde
    return y.laplacian - pde.c0 * y.value - pde.q_of(x, y.value) + problem.f(x) + u


def adjoint_residual(problem, p, y, x):
    """Δp − c₀p − ∂_y q(x, y)·p + y − y_d for a FieldEval p and state values y."""
    pde = problem.pde
    return p.laplacian - pde.c0 * p.value - pde.dq_of(x, y) * p.value + y - problem.y_d(x)


def cpinn_residuals(problem, y, p, x, smooth=None):
    u = recover_control(problem, p.value, smooth)
    return state_residual(problem, y, u, x), adjoint_residual(problem, p, y.value, x)


def _points(field, samples):
    dtype = getattr(field, "dtype", samples.points.dtype)
    return samples.points.to(dtype)


def empirical_loss(problem, y_net, p_net, interior, boundary, weights, smooth=None):
    """Monte Carlo C-PINN loss. Any field with `evaluate` and `__call__`
    can stand in for a network."""

    _check_nonempty(interior, "interior")
    _check_nonempty(boundary, "boundary")
    x = _points(y_net, interior)
    r_state, r_adjoint = cpinn_residuals(problem, y_net.evaluate(x), p_net.evaluate(x), x, smooth)
    xb = _points(y_net, boundary)
    return LossBreakdown(
        _mean_square(r_state, interior.support_measure),
        weights.alpha_i * _mean_square(r_adjoint, interior.support_measure),
        weights.alpha_b_y * _mean_square(y_net(xb) - problem.g(xb), boundary.support_measure),
        weights.alpha_b_p * _mean_square(p_net(xb) - problem.g_adjoint(xb), boundary.support_measure),
    )


def cpinn_loss_and_grad(problem, y_net, p_net, interior, boundary, weights, smooth=None):
    """Return (breakdown, ∂loss/∂θ_y, ∂loss/∂θ_p)."""
    theta = y_net.theta.detach().clone().requires_grad_(True)
    sigma = p_net.theta.detach().clone().requires_grad_(True)
    with torch.enable_grad():
        breakdown = empirical_loss(problem, y_net.with_theta(theta), p_net.with_theta(sigma),
                                   interior, boundary, weights, smooth)
        grad_theta, grad_sigma = torch.autograd.grad(breakdown.total, (theta, sigma))
    detached = LossBreakdown(*(getattr(breakdown, f.name).detach() for f in dataclasses.fields(breakdown)))
    return detached, grad_theta, grad_sigma


def forward_pinn_loss(problem, y_net, u_field, interior, boundary, alpha):
    """Residual loss of the state equation for a given control:
    |Ω|·mean F² + α|∂Ω|·mean (y − g)², with F = Δy − c₀y − q(x, y) + f + u."""

    _check_nonempty(interior, "interior")
    _check_nonempty(boundary, "boundary")
    x = _points(y_net, interior)
    r = state_residual(problem, y_net.evaluate(x), _values(u_field, x), x)
    xb = _points(y_net, boundary)
    return (_mean_square(r, interior.support_measure)
            + alpha * _mean_square(y_net(xb) - problem.g(xb), boundary.support_measure))


def adjoint_pinn_loss(problem, p_net, y_field, interior, boundary, alpha):
    """Residual loss of the adjoint equation for a given state."""

    _check_nonempty(interior, "interior")
    _check_nonempty(boundary, "boundary")
    x = _points(p_net, interior)
    r = adjoint_residual(problem, p_net.evaluate(x), _values(y_field, x), x)
    xb = _points(p_net, boundary)
    return (_mean_square(r, interior.support_measure)
            + alpha * _mean_square(p_net(xb) - problem.g_adjoint(xb), boundary.support_measure))


def objective_J(y_field, u_field, interior, y_d, lam):
    """|Ω|·mean [½(y − y_d)² + λ/2·u²]."""
    _check_nonempty(interior, "interior")
    x = _points(y_field, interior)
    y, u = _values(y_field, x), _values(u_field, x)
    return interior.support_measure * (0.5 * (y - y_d(x)) ** 2 + 0.5 * lam * u ** 2).mean()


def _values(field, x):
    if torch.is_tensor(field):
        if field.shape != x.shape[:1]:
            raise ShapeError(f"{field.shape[0]} field values for {x.shape[0]} points")
        return field
    return field(x)
