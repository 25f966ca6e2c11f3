from abc import ABC, abstractmethod
import dataclasses
import enum
import logging
import math
import time
import torch

from .activation import ActivationKind
from .errors import ConfigError, OptimizerError, SolverDiverged
from .loss import (LossWeights, adjoint_pinn_loss, cpinn_loss_and_grad, empirical_loss,
                   forward_pinn_loss, objective_J, state_residual)
from .metrics import Evaluator
from .mlp import init_mlp, scale_output
from .optim import lbfgs_minimize, minimize_adam

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iter", "loss_total", "loss_state_res", "loss_adj_res", "loss_bdry_y",
                 "loss_bdry_p", "J", "e2_y", "e2_u", "wall_ms"]


class Method(enum.Enum):
    CPINN = "cpinn"
    AONN = "aonn"
    PM = "pm"
    ALM = "alm"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ConfigError("unknown method '{}', expected one of: {}".format(
                name, ", ".join(m.value for m in cls))) from None


# Budgets and weights per benchmark. Tuples are (first sub-problem, later sub-problems).
TABLE_DEFAULTS = {
    "ex1_annulus": dict(alpha_b=5.0, aonn_s=10.0, aonn_K=30, pm_mu0=0.1, pm_beta=2.0, pm_K=8,
                        alm_mu=0.1, alm_K=8, iters=15000, aonn_iters=(1000, 500),
                        pm_iters=(6000, 3000), alm_iters=(6000, 3000)),
    "ex2_annulus_box": dict(alpha_b=5.0, aonn_s=10.0, aonn_K=30, pm_mu0=0.1, pm_beta=2.0, pm_K=8,
                            alm_mu=0.1, alm_K=8, iters=15000, aonn_iters=(1000, 500),
                            pm_iters=(12000, 10000), alm_iters=(6000, 3000)),
    "ex3_hypercube4": dict(alpha_b=100.0, aonn_s=100.0, aonn_K=15, pm_mu0=0.5, pm_beta=2.0, pm_K=5,
                           alm_mu=2.0, alm_K=8, iters=60000, aonn_iters=(6000, 1500),
                           pm_iters=(20000, 20000), alm_iters=(20000, 20000),
                           hidden=(80, 80, 80, 80), n_d=60000, n_b=5000, optimizer="adam",
                           milestones=(20000, 40000), precision=32),
    "ex4_semilinear": dict(alpha_b=100.0, aonn_s=100.0, aonn_K=20, pm_mu0=1.0, pm_beta=2.0, pm_K=8,
                           alm_mu=16.0, alm_K=8, iters=20000, aonn_iters=(2000, 500),
                           pm_iters=(10000, 8000), alm_iters=(10000, 8000)),
}


@dataclasses.dataclass
class SolverConfig:
    method: Method = Method.CPINN
    hidden: tuple = (30, 30, 30, 30)
    activation: str = "tanh"
    n_d: int = 10000
    n_b: int = 3000
    alpha_b: float = 5.0
    optimizer: str = "lbfgs"
    history: int = 10
    lr: float = 1e-3
    lr_rest: float = 1e-4
    milestones: tuple = ()
    iters: int = 15000
    aonn_s: float = 10.0
    aonn_K: int = 30
    aonn_iters: tuple = (1000, 500)
    pm_mu0: float = 0.1
    pm_beta: float = 2.0
    pm_K: int = 8
    pm_mu_prime0: float = 1.0
    pm_beta_prime: float = 2.0
    pm_iters: tuple = (6000, 3000)
    pm_mu_max: float = None
    pm_project_control: bool = False
    alm_mu: float = 0.1
    alm_K: int = 8
    alm_iters: tuple = (6000, 3000)
    alm_clip: float = None
    smooth_projection: float = None
    resample_every: int = 0
    control_scale: float = 0.1
    seed: int = 1
    precision: int = 64
    log_interval: int = 10

    def __post_init__(self):
        self.method = Method.parse(self.method)
        self.hidden = tuple(self.hidden)
        self.milestones = tuple(self.milestones)
        self.aonn_iters = tuple(self.aonn_iters)
        self.pm_iters = tuple(self.pm_iters)
        self.alm_iters = tuple(self.alm_iters)
        self.validate()

    @classmethod
    def keys(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def for_problem(cls, problem_name, method=Method.CPINN, **overrides):
        """Defaults for a benchmark, overridden by keyword."""
        unknown = set(overrides) - set(cls.keys())
        if unknown:
            raise ConfigError("unknown solver keys: {}".format(", ".join(sorted(unknown))))
        settings = dict(TABLE_DEFAULTS.get(problem_name, {}))
        settings.update(overrides)
        settings["method"] = method
        return cls(**settings)

    def widths(self, dim):
        return [dim, *self.hidden, 1]

    def validate(self):
        def need(condition, message):
            if not condition:
                raise ConfigError(message)

        need(all(isinstance(n, int) and n >= 1 for n in self.hidden), f"hidden widths must be positive integers, got {self.hidden}")
        ActivationKind.parse(self.activation)
        need(self.n_d >= 1 and self.n_b >= 1, "n_d and n_b must be ≥ 1")
        need(self.alpha_b > 0, f"alpha_b must be positive, got {self.alpha_b}")
        need(self.optimizer in ("lbfgs", "adam"), f"optimizer must be 'lbfgs' or 'adam', got '{self.optimizer}'")
        need(self.iters >= 0, f"iters must be ≥ 0, got {self.iters}")
        for name in ("aonn_iters", "pm_iters", "alm_iters"):
            budget = getattr(self, name)
            need(len(budget) == 2 and all(isinstance(n, int) and n >= 0 for n in budget),
                 f"{name} must be two budgets ≥ 0, got {budget}")
        need(self.aonn_s >= 0, f"aonn_s must be ≥ 0, got {self.aonn_s}")
        need(self.aonn_K >= 1 and self.pm_K >= 1 and self.alm_K >= 1, "outer step counts must be ≥ 1")
        need(self.pm_mu0 > 0 and self.alm_mu > 0 and self.pm_mu_prime0 > 0, "penalty weights must be positive")
        need(self.pm_beta > 1, f"pm_beta must be > 1, got {self.pm_beta}")
        need(self.pm_beta_prime > 1, f"pm_beta_prime must be > 1, got {self.pm_beta_prime}")
        need(self.pm_mu_max is None or self.pm_mu_max >= self.pm_mu0,
             f"pm_mu_max must be ≥ pm_mu0, got {self.pm_mu_max}")
        need(self.alm_clip is None or self.alm_clip > 0, "alm_clip must be positive")
        need(self.smooth_projection is None or self.smooth_projection > 0, "smooth_projection must be positive")
        need(self.resample_every >= 0, "resample_every must be ≥ 0")
        need(self.resample_every == 0 or self.optimizer == "adam",
             "resample_every needs optimizer 'adam': the line search assumes a fixed loss")
        need(self.precision in (32, 64), f"precision must be 32 or 64, got {self.precision}")
        need(self.log_interval >= 1, "log_interval must be ≥ 1")
        need(self.history >= 1, "history must be ≥ 1")

    def pm_schedule(self):
        """Penalty weights mu_k = mu0·beta^k of the PM stages.

        With `pm_mu_max` the path runs until it reaches that weight, capped
        there, and `pm_K` is ignored."""
        if self.pm_mu_max is None:
            return [self.pm_mu0 * self.pm_beta ** k for k in range(self.pm_K)]
        n = 1 + math.ceil(math.log(self.pm_mu_max / self.pm_mu0) / math.log(self.pm_beta) - 1e-9)
        return [min(self.pm_mu0 * self.pm_beta ** k, self.pm_mu_max) for k in range(n)]

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["method"] = self.method.value
        return d


@dataclasses.dataclass
class SolveReport:
    """Outcome of one solver run.

    `control` is the reported control field; `trace` holds rows keyed by
    TRACE_COLUMNS; `extras` holds method-specific histories."""

    method: Method
    problem: str
    nets: dict
    control: object
    trace: list
    metrics: object
    config: SolverConfig
    seed: int
    status: str = "ok"
    extras: dict = dataclasses.field(default_factory=dict)


class RecoveredControl:
    """u = −λ⁻¹p projected onto the bounds, from an adjoint network."""

    def __init__(self, problem, p_net):
        self.problem = problem
        self.p_net = p_net

    @property
    def dtype(self):
        return self.p_net.dtype

    def __call__(self, x):
        return self.problem.recover_control(self.p_net(x))


class ProjectedControl:
    def __init__(self, u_net, bounds):
        self.u_net = u_net
        self.bounds = bounds

    @property
    def dtype(self):
        return self.u_net.dtype

    def __call__(self, x):
        return self.bounds.project(self.u_net(x))


def reported_control(problem, cfg, nets):
    """The control a run reports, rebuilt from its networks."""
    if cfg.method is Method.CPINN:
        return RecoveredControl(problem, nets["p"])
    if problem.constrained and cfg.pm_project_control and cfg.method in (Method.PM, Method.ALM):
        return ProjectedControl(nets["u"], problem.bounds)
    return nets["u"]


def _split(theta, sizes):
    return torch.split(theta, list(sizes))


def _leaf(theta):
    return theta.detach().clone().requires_grad_(True)


class Solver(ABC):
    """An abstraction of an optimal-control solver.

    Subclasses build their networks, run their optimization in `_solve`
    and name the reported control. The base class samples the collocation
    sets, runs the optimizers and records the trace."""

    method = None

    def __init__(self, problem, cfg, evaluator=None, on_row=None, on_checkpoint=None):
        if cfg.method is not self.method:
            raise ConfigError(f"{type(self).__name__} needs method '{self.method.value}', got '{cfg.method.value}'")
        self.problem = problem
        self.cfg = cfg
        self.dtype = torch.float32 if cfg.precision == 32 else torch.float64
        self.interior = problem.domain.sample_interior(cfg.n_d, cfg.seed).to(self.dtype)
        self.boundary = problem.domain.sample_boundary(cfg.n_b, cfg.seed).to(self.dtype)
        self.evaluator = evaluator or Evaluator(problem)
        self.on_row = on_row
        self.on_checkpoint = on_checkpoint
        self.widths = cfg.widths(problem.domain.dim)
        self.activation = ActivationKind.parse(cfg.activation)
        self.trace = []
        self.extras = {}
        self.iteration = 0
        self.start_time = None

    # Networks

    def _init_net(self, offset, scale=None):
        net = init_mlp(self.widths, self.activation, self.cfg.seed + offset).to(self.dtype)
        return scale_output(net, scale) if scale is not None else net

    @abstractmethod
    def nets(self):
        pass

    def control(self):
        return reported_control(self.problem, self.cfg, self.nets())

    @abstractmethod
    def _solve(self):
        pass

    @abstractmethod
    def _terms(self):
        """Loss columns of the trace at the current networks."""
        pass

    # Running

    def solve(self):
        self.start_time = time.time()
        logger.info("{} on {}: widths {}, n_d {}, n_b {}, seed {}".format(
            self.method.value, self.problem.name, self.widths, self.cfg.n_d, self.cfg.n_b, self.cfg.seed))
        try:
            self._solve()
        except OptimizerError as e:
            logger.error(f"{self.method.value} diverged: {e}")
            report = self._report(status="diverged")
            raise SolverDiverged(str(e), e.iteration, self.nets(), report) from e
        return self._report()

    def _report(self, status="ok"):
        if not self.trace or self.trace[-1]["iter"] != self.iteration:
            self._record(force=True)
        metrics = self.evaluator.metrics(self.method.value, self.nets()["y"], self.control(), self._elapsed())
        return SolveReport(self.method, self.problem.name, self.nets(), self.control(), self.trace,
                           metrics, self.cfg, self.cfg.seed, status, self.extras)

    def _elapsed(self):
        return time.time() - self.start_time

    def _minimize(self, loss_and_grad, theta0, iters, apply, first=True):
        """Run the configured optimizer; `apply(theta)` installs iterates into the networks."""

        def callback(k, theta, loss):
            apply(theta)
            if k > 0:
                self.iteration += 1
                self._record()

        if self.cfg.optimizer == "adam":
            lr = self.cfg.lr if first else self.cfg.lr_rest
            theta, trace = minimize_adam(loss_and_grad, theta0, iters, lr, self.cfg.milestones, callback)
        else:
            theta, trace = lbfgs_minimize(loss_and_grad, theta0, iters, self.cfg.history, callback)
            if trace.status != "budget":
                logger.info(f"L-BFGS stopped after {len(trace) - 1} iterations: {trace.status}")
        apply(theta)
        return theta, trace

    def _record(self, force=False):
        if not force and self.iteration % self.cfg.log_interval != 0:
            return
        with torch.no_grad():
            terms = self._terms()
            y_net = self.nets()["y"]
            J = float(objective_J(y_net, self.control(), self.interior, self.problem.y_d, self.problem.lam))
        errors = self.evaluator.errors(y_net, self.control())
        row = {"iter": self.iteration, **terms, "J": J, "e2_y": errors["e2_y"], "e2_u": errors["e2_u"],
               "wall_ms": 1000 * self._elapsed()}
        self.trace.append(row)
        logger.info("I {} | L {:.4e} | J {:.4e} | e2y {:.3e} | e2u {:.3e} | D {}".format(
            row["iter"], row["loss_total"], J, row["e2_y"], row["e2_u"], int(self._elapsed())))
        if self.on_row is not None:
            self.on_row(row)
        if self.on_checkpoint is not None:
            self.on_checkpoint(self.iteration, self.nets())

    # Shared loss pieces

    def _pinn_state_terms(self, y_net, u_field):
        x = self.interior.points
        r = state_residual(self.problem, y_net.evaluate(x), u_field(x) if callable(u_field) else u_field, x)
        xb = self.boundary.points
        state = self.interior.support_measure * (r * r).mean()
        bdry = self.cfg.alpha_b * self.boundary.support_measure * (y_net(xb) - self.problem.g(xb)).pow(2).mean()
        return float(state), float(bdry)


class CpinnSolver(Solver):
    """Joint minimization of the coupled state/adjoint residual loss; the
    control is recovered from the adjoint network."""

    method = Method.CPINN

    def __init__(self, problem, cfg, **kwargs):
        super().__init__(problem, cfg, **kwargs)
        self.weights = LossWeights.default(problem.lam, cfg.alpha_b)
        self.y_net = self._init_net(0)
        self.p_net = self._init_net(1, cfg.control_scale * problem.lam if problem.constrained else None)

    def nets(self):
        return {"y": self.y_net, "p": self.p_net}

    def _terms(self):
        breakdown = empirical_loss(self.problem, self.y_net, self.p_net, self.interior, self.boundary,
                                   self.weights, self.cfg.smooth_projection)
        return breakdown.as_floats()

    def _resample(self, k):
        seed = (self.cfg.seed << 20) + k
        self.interior = self.problem.domain.sample_interior(self.cfg.n_d, seed).to(self.dtype)
        self.boundary = self.problem.domain.sample_boundary(self.cfg.n_b, seed).to(self.dtype)

    def _solve(self):
        n_y = self.y_net.num_params
        sizes = (n_y, self.p_net.num_params)
        calls = [0]

        def loss_and_grad(params):
            if self.cfg.resample_every and calls[0] and calls[0] % self.cfg.resample_every == 0:
                self._resample(calls[0])
            calls[0] += 1
            theta, sigma = _split(params, sizes)
            breakdown, g_theta, g_sigma = cpinn_loss_and_grad(
                self.problem, self.y_net.with_theta(theta), self.p_net.with_theta(sigma),
                self.interior, self.boundary, self.weights, self.cfg.smooth_projection)
            return float(breakdown.total), torch.cat([g_theta, g_sigma])

        def apply(params):
            theta, sigma = _split(params.detach(), sizes)
            self.y_net = self.y_net.with_theta(theta.clone())
            self.p_net = self.p_net.with_theta(sigma.clone())

        self._record(force=True)
        self._minimize(loss_and_grad, torch.cat([self.y_net.theta, self.p_net.theta]), self.cfg.iters, apply)


class AonnSolver(Solver):
    """Alternating state solve, adjoint solve and a fitted gradient step
    u ← u − s(λu + p) on a control network."""

    method = Method.AONN

    def __init__(self, problem, cfg, **kwargs):
        super().__init__(problem, cfg, **kwargs)
        self.y_net = self._init_net(0)
        self.p_net = self._init_net(1)
        self.u_net = self._init_net(2, cfg.control_scale if problem.constrained else None)

    def nets(self):
        return {"y": self.y_net, "p": self.p_net, "u": self.u_net}

    def _terms(self):
        state, bdry_y = self._pinn_state_terms(self.y_net, self.u_net)
        x, xb = self.interior.points, self.boundary.points
        y = self.y_net(x)
        loss_p = adjoint_pinn_loss(self.problem, self.p_net, y, self.interior, self.boundary, self.cfg.alpha_b)
        bdry_p = self.cfg.alpha_b * self.boundary.support_measure * (
            self.p_net(xb) - self.problem.g_adjoint(xb)).pow(2).mean()
        adj = float(loss_p) - float(bdry_p)
        return {"loss_total": state + bdry_y + adj + float(bdry_p), "loss_state_res": state,
                "loss_adj_res": adj, "loss_bdry_y": bdry_y, "loss_bdry_p": float(bdry_p)}

    def _solve(self):
        problem, cfg = self.problem, self.cfg
        x = self.interior.points
        n_pde, n_fit = cfg.aonn_iters
        gaps = []
        self._record(force=True)
        for k in range(cfg.aonn_K):
            first = k == 0
            with torch.no_grad():
                u = self.u_net(x)

            def state_loss(theta):
                theta = _leaf(theta)
                with torch.enable_grad():
                    loss = forward_pinn_loss(problem, self.y_net.with_theta(theta), u, self.interior,
                                             self.boundary, cfg.alpha_b)
                    grad, = torch.autograd.grad(loss, theta)
                return float(loss.detach()), grad

            self._minimize(state_loss, self.y_net.theta, n_pde,
                           lambda theta: setattr(self, "y_net", self.y_net.with_theta(theta.detach().clone())), first)
            with torch.no_grad():
                y = self.y_net(x)

            def adjoint_loss(sigma):
                sigma = _leaf(sigma)
                with torch.enable_grad():
                    loss = adjoint_pinn_loss(problem, self.p_net.with_theta(sigma), y, self.interior,
                                             self.boundary, cfg.alpha_b)
                    grad, = torch.autograd.grad(loss, sigma)
                return float(loss.detach()), grad

            self._minimize(adjoint_loss, self.p_net.theta, n_pde,
                           lambda sigma: setattr(self, "p_net", self.p_net.with_theta(sigma.detach().clone())), first)
            with torch.no_grad():
                p = self.p_net(x)
                d_u = problem.lam * u + p
                gaps.append(float(d_u.pow(2).mean().sqrt()))
                target = u - cfg.aonn_s * d_u
                if problem.constrained:
                    target = problem.bounds.project(target)
            logger.info(f"AONN step {k + 1}/{cfg.aonn_K}: ‖λu + p‖ {gaps[-1]:.4e}")

            def fit_loss(kappa):
                kappa = _leaf(kappa)
                with torch.enable_grad():
                    loss = self.interior.support_measure * (self.u_net.with_theta(kappa)(x) - target).pow(2).mean()
                    grad, = torch.autograd.grad(loss, kappa)
                return float(loss.detach()), grad

            self._minimize(fit_loss, self.u_net.theta, n_fit,
                           lambda kappa: setattr(self, "u_net", self.u_net.with_theta(kappa.detach().clone())), first)
        self.extras["optimality_gap"] = gaps


class _PenaltySolver(Solver):
    """Shared pieces of the penalty and augmented Lagrangian methods:
    a state network, a control network and the objective

        J(y, u) + μ·L_pinn(y, u) + μ'/2·|Ω|·mean (u − P_U(u))²

    with L_pinn = ½·forward_pinn_loss."""

    def __init__(self, problem, cfg, **kwargs):
        super().__init__(problem, cfg, **kwargs)
        self.y_net = self._init_net(0)
        self.u_net = self._init_net(2, cfg.control_scale if problem.constrained else None)
        self.mu = None

    def nets(self):
        return {"y": self.y_net, "u": self.u_net}

    def _effective_control(self, u):
        if self.problem.constrained and self.cfg.pm_project_control:
            return self.problem.bounds.project(u)
        return u

    def _box_penalty(self, u, mu_prime):
        if not self.problem.constrained or self.cfg.pm_project_control:
            return torch.zeros((), dtype=u.dtype)
        return 0.5 * mu_prime * self.interior.support_measure * (u - self.problem.bounds.project(u)).pow(2).mean()

    def _objective_parts(self, y_net, u_net, mu_prime):
        x = self.interior.points
        u = self._effective_control(u_net(x))
        J = objective_J(y_net, u, self.interior, self.problem.y_d, self.problem.lam)
        L = 0.5 * forward_pinn_loss(self.problem, y_net, u, self.interior, self.boundary, self.cfg.alpha_b)
        return J, L, self._box_penalty(u_net(x), mu_prime)

    def _terms(self):
        state, bdry_y = self._pinn_state_terms(self.y_net, self._effective_control(self.u_net(self.interior.points)))
        nan = float("nan")
        total = self._current_objective() if self.mu is not None else state + bdry_y
        return {"loss_total": total, "loss_state_res": state, "loss_adj_res": nan,
                "loss_bdry_y": bdry_y, "loss_bdry_p": nan}

    def _run_stage(self, k, loss_fn):
        sizes = (self.y_net.num_params, self.u_net.num_params)
        iters = self._budgets()[0 if k == 0 else 1]

        def loss_and_grad(params):
            params = _leaf(params)
            theta, kappa = _split(params, sizes)
            with torch.enable_grad():
                loss = loss_fn(self.y_net.with_theta(theta), self.u_net.with_theta(kappa))
                grad, = torch.autograd.grad(loss, params)
            return float(loss.detach()), grad

        def apply(params):
            theta, kappa = _split(params.detach(), sizes)
            self.y_net = self.y_net.with_theta(theta.clone())
            self.u_net = self.u_net.with_theta(kappa.clone())

        return self._minimize(loss_and_grad, torch.cat([self.y_net.theta, self.u_net.theta]), iters, apply, k == 0)

    @abstractmethod
    def _budgets(self):
        pass

    @abstractmethod
    def _current_objective(self):
        pass


class PmSolver(_PenaltySolver):
    """Penalty method with the path μ_k = μ₀β^k, warm-starting every stage."""

    method = Method.PM

    def _budgets(self):
        return self.cfg.pm_iters

    def _current_objective(self):
        J, L, pen = self._objective_parts(self.y_net, self.u_net, self.mu_prime)
        return float(J + self.mu * L + pen)

    def _solve(self):
        cfg = self.cfg
        stages = []
        schedule = cfg.pm_schedule()
        self._record(force=True)
        for k, mu in enumerate(schedule):
            self.mu = mu
            self.mu_prime = mu_prime = cfg.pm_mu_prime0 * cfg.pm_beta_prime ** k

            def loss_fn(y_net, u_net):
                J, L, pen = self._objective_parts(y_net, u_net, mu_prime)
                return J + mu * L + pen

            _, trace = self._run_stage(k, loss_fn)
            with torch.no_grad():
                J, L, pen = self._objective_parts(self.y_net, self.u_net, mu_prime)
            stages.append({"stage": k, "mu": mu, "mu_prime": mu_prime, "first_loss": trace.losses[0],
                           "last_loss": trace.losses[-1], "J": float(J), "L_pinn": float(L),
                           "box_penalty": float(pen)})
            logger.info(f"PM stage {k + 1}/{len(schedule)}: mu {mu:g}, J {float(J):.4e}, L_pinn {float(L):.4e}")
        self.extras["stages"] = stages


def alm_update_multipliers(eta_d, eta_b, F, boundary_residual, mu, alpha, clip=None):
    """Uzawa step eta_d ← eta_d + mu·F, eta_b ← eta_b + mu·alpha·(y − g), optionally clipped to ±clip."""
    eta_d = eta_d + mu * F
    eta_b = eta_b + mu * alpha * boundary_residual
    if clip is not None:
        eta_d, eta_b = eta_d.clamp(-clip, clip), eta_b.clamp(-clip, clip)
    return eta_d, eta_b


class AlmSolver(_PenaltySolver):
    """Augmented Lagrangian method with pointwise multipliers on the
    interior and boundary collocation points."""

    method = Method.ALM

    def __init__(self, problem, cfg, **kwargs):
        super().__init__(problem, cfg, **kwargs)
        self.eta_d = torch.zeros(cfg.n_d, dtype=self.dtype)
        self.eta_b = torch.zeros(cfg.n_b, dtype=self.dtype)
        self.mu_prime = cfg.pm_mu_prime0

    def _budgets(self):
        return self.cfg.alm_iters

    def _residuals(self, y_net, u_net):
        x, xb = self.interior.points, self.boundary.points
        F = state_residual(self.problem, y_net.evaluate(x), self._effective_control(u_net(x)), x)
        return F, y_net(xb) - self.problem.g(xb)

    def _lagrangian(self, y_net, u_net, mu_prime):
        J, L, pen = self._objective_parts(y_net, u_net, mu_prime)
        F, b = self._residuals(y_net, u_net)
        coupling = (self.interior.support_measure * (self.eta_d * F).mean()
                    + self.boundary.support_measure * (self.eta_b * b).mean())
        return J + self.mu * L + pen + coupling

    def _current_objective(self):
        return float(self._lagrangian(self.y_net, self.u_net, self.mu_prime))

    def _solve(self):
        cfg = self.cfg
        self.mu = cfg.alm_mu
        norms = []
        self._record(force=True)
        for k in range(cfg.alm_K):
            self.mu_prime = cfg.pm_mu_prime0 * cfg.pm_beta_prime ** k
            mu_prime = self.mu_prime
            self._run_stage(k, lambda y_net, u_net: self._lagrangian(y_net, u_net, mu_prime))
            with torch.no_grad():
                F, b = self._residuals(self.y_net, self.u_net)
                self.eta_d, self.eta_b = alm_update_multipliers(self.eta_d, self.eta_b, F, b, self.mu,
                                                                cfg.alpha_b, cfg.alm_clip)
            norms.append({"stage": k, "eta_d_max": float(self.eta_d.abs().max()),
                          "eta_b_max": float(self.eta_b.abs().max())})
            logger.info("ALM round {}/{}: max|eta_d| {:.4e}, max|eta_b| {:.4e}".format(
                k + 1, cfg.alm_K, norms[-1]["eta_d_max"], norms[-1]["eta_b_max"]))
        self.extras["multipliers"] = norms
        self.extras["eta_d"] = self.eta_d
        self.extras["eta_b"] = self.eta_b


SOLVERS = {Method.CPINN: CpinnSolver, Method.AONN: AonnSolver, Method.PM: PmSolver, Method.ALM: AlmSolver}


def solve_cpinn(problem, cfg, **kwargs):
    return CpinnSolver(problem, cfg, **kwargs).solve()


def solve_aonn(problem, cfg, **kwargs):
    return AonnSolver(problem, cfg, **kwargs).solve()


def solve_pm(problem, cfg, **kwargs):
    return PmSolver(problem, cfg, **kwargs).solve()


def solve_alm(problem, cfg, **kwargs):
    return AlmSolver(problem, cfg, **kwargs).solve()
