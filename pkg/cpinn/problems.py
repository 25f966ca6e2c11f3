import dataclasses
import math
import torch

from .errors import ProblemError
from .geometry import Annulus, Hypercube, UnitSquareWithSubregion
from .loss import project_control
from .mlp import FieldEval


FD_STEP = 1e-3


class Closure:
    """A scalar field given by a torch function of points (N, d) ↦ (N,),
    optionally with its analytic Laplacian.

    Gradients come from autograd. Without an analytic Laplacian, `fd=True`
    allows a (2d + 1)-point finite-difference Laplacian."""

    def __init__(self, value, laplacian=None, fd=False):
        self.value = value
        self.laplacian = laplacian
        self.fd = fd

    @classmethod
    def constant(cls, c):
        return cls(lambda x: torch.full(x.shape[:1], float(c), dtype=x.dtype),
                   lambda x: torch.zeros(x.shape[:1], dtype=x.dtype))

    def __call__(self, x):
        return self.value(x)

    def has_laplacian(self):
        return self.laplacian is not None

    def lap(self, x):
        if self.laplacian is not None:
            return self.laplacian(x)
        if self.fd:
            return fd_laplacian(self.value, x)
        raise ProblemError("closure has no analytic Laplacian; pass fd_fallback=True "
                           "to use the finite-difference Laplacian")

    def evaluate(self, x):
        x = torch.as_tensor(x)
        xg = x.detach().clone().requires_grad_(True)
        with torch.enable_grad():
            value = self.value(xg)
            gradient, = torch.autograd.grad(value.sum(), xg)
        return FieldEval(value.detach(), gradient, self.lap(x))


def fd_laplacian(value, x, h=FD_STEP):
    x = torch.as_tensor(x)
    center = value(x)
    lap = torch.zeros_like(center)
    for i in range(x.shape[-1]):
        e = torch.zeros_like(x)
        e[:, i] = h
        lap = lap + (value(x + e) - 2 * center + value(x - e)) / h ** 2
    return lap


@dataclasses.dataclass(frozen=True)
class PdeSpec:
    """Operator −Δy + c₀y + q(x, y); q and ∂_y q default to zero."""

    c0: float = 0.0
    q: object = None
    dq: object = None

    def q_of(self, x, y):
        return torch.zeros_like(y) if self.q is None else self.q(x, y)

    def dq_of(self, x, y):
        return torch.zeros_like(y) if self.dq is None else self.dq(x, y)


@dataclasses.dataclass(frozen=True)
class Bounds:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ProblemError(f"control bounds need lower < upper, got ({self.lower}, {self.upper})")

    def project(self, v):
        return project_control(v, self.lower, self.upper)


@dataclasses.dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One elliptic optimal-control instance.

    The state equation is −Δy + c₀y + q(x, y) = f + u in Ω with y = g on
    ∂Ω, the objective ½‖y − y_d‖² + λ/2‖u‖², and the adjoint equals
    `g_adjoint` on ∂Ω. `published` keeps data as printed in the
    literature, for the consistency oracle."""

    name: str
    domain: object
    pde: PdeSpec
    f: Closure
    y_d: Closure
    g: Closure
    g_adjoint: Closure
    lam: float
    bounds: Bounds = None
    exact_y: Closure = None
    exact_u: Closure = None
    exact_p: Closure = None
    published: dict = dataclasses.field(default_factory=dict)

    @property
    def constrained(self):
        return self.bounds is not None

    @property
    def has_exact(self):
        return None not in (self.exact_y, self.exact_u, self.exact_p)

    def recover_control(self, p):
        """u = −λ⁻¹p, projected onto the bounds if any."""
        u = -p / self.lam
        return u if self.bounds is None else self.bounds.project(u)


@dataclasses.dataclass(frozen=True)
class ConsistencyReport:
    max_state_residual: float
    max_adjoint_residual: float
    max_optimality_gap: float
    tolerance: float

    @property
    def passed(self):
        return max(self.max_state_residual, self.max_adjoint_residual,
                   self.max_optimality_gap) <= self.tolerance


def manufacture_problem(name, y_bar, w, lam, domain, pde=None, bounds=None, fd_fallback=False):
    """Build data (f, y_d, g) for which (ȳ, ū, p̄) solves the optimality system.

    ū = w (or its projection when bounds are given) and p̄ = −λw. Then

        f   = −Δȳ + c₀ȳ + q(x, ȳ) − ū
        y_d = ȳ + Δp̄ − c₀p̄ − ∂_y q(x, ȳ)·p̄
        g   = ȳ and g_adjoint = p̄ on ∂Ω."""

    pde = pde or PdeSpec()
    if isinstance(bounds, (tuple, list)):
        bounds = Bounds(*bounds)
    for label, closure in (("y_bar", y_bar), ("w", w)):
        if not closure.has_laplacian():
            if not fd_fallback:
                raise ProblemError(f"{name}: {label} has no analytic Laplacian; pass fd_fallback=True "
                                   "to use the finite-difference Laplacian")
            closure.fd = True

    def u_bar(x):
        return w(x) if bounds is None else bounds.project(w(x))

    exact_p = Closure(lambda x: -lam * w(x), lambda x: -lam * w.lap(x))
    exact_u = Closure(u_bar, w.lap if bounds is None else None)

    def f(x):
        y = y_bar(x)
        return -y_bar.lap(x) + pde.c0 * y + pde.q_of(x, y) - u_bar(x)

    def y_d(x):
        y, p = y_bar(x), exact_p(x)
        return y + exact_p.lap(x) - pde.c0 * p - pde.dq_of(x, y) * p

    return ProblemSpec(name, domain, pde, Closure(f), Closure(y_d), y_bar, exact_p, float(lam),
                       bounds, y_bar, exact_u, exact_p)


def verify_manufactured(problem, grid_n=1000, seed=0, tol=None, published=False):
    """Check the optimality system on `grid_n` random interior points.

    With `published=True` the data as printed in the literature replace
    the generated f and y_d."""

    if not problem.has_exact:
        raise ProblemError(f"{problem.name} has no exact solution to verify")
    f = problem.published.get("f", problem.f) if published else problem.f
    y_d = problem.published.get("y_d", problem.y_d) if published else problem.y_d
    fd = problem.exact_y.fd or problem.exact_p.fd
    if tol is None:
        tol = 1e-5 if fd else 1e-8

    x = problem.domain.sample_interior(grid_n, seed).points
    pde = problem.pde
    y, p, u = problem.exact_y(x), problem.exact_p(x), problem.exact_u(x)
    state = f(x) + u - (-problem.exact_y.lap(x) + pde.c0 * y + pde.q_of(x, y))
    adjoint = -problem.exact_p.lap(x) + pde.c0 * p + pde.dq_of(x, y) * p - (y - y_d(x))
    gap = u - problem.recover_control(p)

    def sup(r):
        return float(r.abs().max()) if r.numel() else 0.0

    return ConsistencyReport(sup(state), sup(adjoint), sup(gap), tol)


# Closure families


def _polar(x):
    r = x.norm(dim=-1)
    return r, x[:, 1] / r


def annulus_quadratic_state():
    """ȳ = r², Δȳ = 4."""
    return Closure(lambda x: (x * x).sum(-1), lambda x: torch.full(x.shape[:1], 4.0, dtype=x.dtype))


def annulus_control(a=1.0):
    """w = a·(r − 1)(r − 3)·sin θ, Δw = 3a·(1 − r⁻²)·sin θ."""

    def value(x):
        r, s = _polar(x)
        return a * (r - 1) * (r - 3) * s

    def laplacian(x):
        r, s = _polar(x)
        return 3 * a * (1 - 1 / r ** 2) * s

    return Closure(value, laplacian)


def sine_product(dim, coef=1.0):
    """coef·∏ sin(πx_i), whose Laplacian is −dπ² times itself."""

    def value(x):
        return coef * torch.sin(math.pi * x).prod(-1)

    return Closure(value, lambda x: -dim * math.pi ** 2 * value(x))


def _G(t):
    return torch.exp(t * (1 - t))


def _G2(t):
    return ((1 - 2 * t) ** 2 - 2) * _G(t)


def _A(t):
    return t * torch.cos(math.pi * t)


def _A2(t):
    return -2 * math.pi * torch.sin(math.pi * t) - math.pi ** 2 * t * torch.cos(math.pi * t)


def semilinear_state():
    """ȳ = G(x₁)sin(πx₂) + G(x₂)sin(πx₁) with G(t) = exp(t(1 − t))."""

    def value(x):
        s = torch.sin(math.pi * x)
        return _G(x[:, 0]) * s[:, 1] + _G(x[:, 1]) * s[:, 0]

    def laplacian(x):
        s = torch.sin(math.pi * x)
        x1, x2 = x[:, 0], x[:, 1]
        return ((_G2(x1) - math.pi ** 2 * _G(x1)) * s[:, 1]
                + (_G2(x2) - math.pi ** 2 * _G(x2)) * s[:, 0])

    return Closure(value, laplacian)


def semilinear_control(lam):
    """w = −λ⁻¹x₁x₂(1 + cos(πx₁)(1 + cos(πx₂))) = −λ⁻¹(x₁x₂ + A(x₁)x₂ + A(x₁)A(x₂))
    with A(t) = t·cos(πt)."""

    def value(x):
        x1, x2 = x[:, 0], x[:, 1]
        return -x1 * x2 * (1 + torch.cos(math.pi * x1) * (1 + torch.cos(math.pi * x2))) / lam

    def laplacian(x):
        x1, x2 = x[:, 0], x[:, 1]
        return -(x2 * _A2(x1) + _A2(x1) * _A(x2) + _A(x1) * _A2(x2)) / lam

    return Closure(value, laplacian)


def cubic_reaction(domain, inside=1.0, outside=3.0):
    """q(x, y) = k(x)y³ with k piecewise constant on the marked subregion."""

    def k(x):
        return torch.where(domain.in_subregion(x), torch.tensor(inside, dtype=x.dtype),
                           torch.tensor(outside, dtype=x.dtype))

    return PdeSpec(1.0, lambda x, y: k(x) * y ** 3, lambda x, y: 3 * k(x) * y ** 2)


# Benchmarks


def _ex1_annulus():
    lam = 0.01
    problem = manufacture_problem("ex1_annulus", annulus_quadratic_state(), annulus_control(1.0),
                                  lam, Annulus(1.0, 3.0))
    return dataclasses.replace(problem, published=_published_annulus(lam, bounds=None))


def _ex2_annulus_box():
    lam = 0.01
    bounds = Bounds(-0.5, 0.7)
    problem = manufacture_problem("ex2_annulus_box", annulus_quadratic_state(), annulus_control(-1.0),
                                  lam, Annulus(1.0, 3.0), bounds=bounds)
    return dataclasses.replace(problem, published=_published_annulus(lam, bounds))


def _published_annulus(lam, bounds):
    w = annulus_control(1.0)
    if bounds is None:
        f = Closure(lambda x: w(x) - 4)
    else:
        f = Closure(lambda x: -4 - bounds.project(-w(x)))

    def y_d(x):
        r, s = _polar(x)
        return r ** 2 + 3 * lam * (1 - 1 / r ** 2) * s

    return {"f": f, "y_d": Closure(y_d)}


def _ex3_hypercube4():
    lam = 0.01
    problem = manufacture_problem("ex3_hypercube4", sine_product(4), sine_product(4, 4 * math.pi ** 2),
                                  lam, Hypercube(4))
    y_bar = sine_product(4)
    published = {"f": Closure.constant(0.0),
                 "y_d": Closure(lambda x: (1 - 16 * lam * math.pi ** 4) * y_bar(x))}
    return dataclasses.replace(problem, published=published)


def _ex4_semilinear():
    lam = 0.01
    domain = UnitSquareWithSubregion()
    return manufacture_problem("ex4_semilinear", semilinear_state(), semilinear_control(lam),
                               lam, domain, cubic_reaction(domain))


BENCHMARKS = {
    "ex1_annulus": _ex1_annulus,
    "ex2_annulus_box": _ex2_annulus_box,
    "ex3_hypercube4": _ex3_hypercube4,
    "ex4_semilinear": _ex4_semilinear,
}


def load_problem(name):
    if name not in BENCHMARKS:
        raise ProblemError("unknown problem '{}', available: {}".format(name, ", ".join(BENCHMARKS)))
    return BENCHMARKS[name]()


FAMILY_KEYS = {
    "sine_product": {"family", "name", "dim", "coef", "lam", "bounds"},
    "annulus_quadratic": {"family", "name", "r_in", "r_out", "coef", "lam", "bounds"},
}


def make_problem(definition):
    """Build a problem from a benchmark name or an inline family definition,
    e.g. {"family": "sine_product", "dim": 2, "coef": 2π², "lam": 0.1}."""

    if isinstance(definition, str):
        return load_problem(definition)
    family = definition.get("family")
    if family not in FAMILY_KEYS:
        raise ProblemError("unknown problem family '{}', available: {}".format(family, ", ".join(FAMILY_KEYS)))
    unknown = set(definition) - FAMILY_KEYS[family]
    if unknown:
        raise ProblemError("unknown keys for family '{}': {}".format(family, ", ".join(sorted(unknown))))

    lam = float(definition.get("lam", 0.01))
    bounds = Bounds(*definition["bounds"]) if definition.get("bounds") is not None else None
    coef = float(definition.get("coef", 1.0))
    if family == "sine_product":
        dim = int(definition.get("dim", 2))
        domain = Hypercube(dim)
        y_bar, w = sine_product(dim), sine_product(dim, coef)
    else:
        domain = Annulus(definition.get("r_in", 1.0), definition.get("r_out", 3.0))
        y_bar, w = annulus_quadratic_state(), annulus_control(coef)
    return manufacture_problem(definition.get("name", family), y_bar, w, lam, domain, bounds=bounds)
