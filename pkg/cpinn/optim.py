import bisect
import collections
import dataclasses
import math
import torch

from .errors import OptimizerError


@dataclasses.dataclass
class OptimTrace:
    """Rows of one optimizer run; row 0 is the starting point.

    `status` is one of "budget", "converged", "line_search_failed"."""

    rows: list = dataclasses.field(default_factory=list)
    status: str = "budget"
    evals: int = 0

    @property
    def losses(self):
        return [row["loss"] for row in self.rows]

    def __len__(self):
        return len(self.rows)


def _check_finite(loss, grad, iteration):
    if not math.isfinite(loss):
        raise OptimizerError(f"non-finite loss {loss}", iteration)
    if not torch.isfinite(grad).all():
        raise OptimizerError("non-finite gradient", iteration)


# Adam


@dataclasses.dataclass
class AdamState:
    m: torch.Tensor
    v: torch.Tensor
    step: int = 0
    lr: float = 1e-3
    milestones: tuple = ()
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, theta, lr=1e-3, milestones=()):
        return cls(torch.zeros_like(theta), torch.zeros_like(theta), 0, lr, tuple(sorted(milestones)))

    def current_lr(self):
        """Learning rate of the next step: divided by 10 at each passed milestone."""
        return self.lr * 0.1 ** bisect.bisect_right(self.milestones, self.step)


def adam_step(state, theta, grad):
    """One bias-corrected Adam update; returns the new (state, θ)."""
    if grad.shape != theta.shape or state.m.shape != theta.shape:
        raise ValueError(f"shape mismatch: theta {tuple(theta.shape)}, grad {tuple(grad.shape)}, "
                         f"moments {tuple(state.m.shape)}")
    if not torch.isfinite(grad).all():
        raise OptimizerError("non-finite gradient", state.step)
    lr = state.current_lr()
    t = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = m / (1 - state.beta1 ** t)
    v_hat = v / (1 - state.beta2 ** t)
    theta = theta - lr * m_hat / (v_hat.sqrt() + state.eps)
    return dataclasses.replace(state, m=m, v=v, step=t), theta


def minimize_adam(loss_and_grad, theta0, iters, lr=1e-3, milestones=(), callback=None):
    state = AdamState.zeros_like(theta0, lr, milestones)
    theta = theta0.clone()
    trace = OptimTrace()
    loss, grad = loss_and_grad(theta)
    trace.evals += 1
    _check_finite(loss, grad, 0)
    trace.rows.append({"iter": 0, "loss": loss, "grad_norm": float(grad.norm()), "lr": state.current_lr()})
    if callback is not None:
        callback(0, theta, loss)

    for k in range(1, iters + 1):
        state, theta = adam_step(state, theta, grad)
        loss, grad = loss_and_grad(theta)
        trace.evals += 1
        _check_finite(loss, grad, k)
        trace.rows.append({"iter": k, "loss": loss, "grad_norm": float(grad.norm()), "lr": state.current_lr()})
        if callback is not None:
            callback(k, theta, loss)
    return theta, trace


# L-BFGS


@dataclasses.dataclass
class LbfgsState:
    m: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    max_ls: int = 25
    tolerance_grad: float = 1e-10
    tolerance_change: float = 1e-9
    history: collections.deque = None

    def __post_init__(self):
        if self.history is None:
            self.history = collections.deque(maxlen=self.m)

    def store(self, s, y):
        """Keep (s, y) only when sᵀy > 1e-10·‖s‖‖y‖."""
        sy = float(s @ y)
        if sy > 1e-10 * float(s.norm()) * float(y.norm()):
            self.history.append((s, y, 1 / sy))
            return True
        return False

    def direction(self, g):
        """−H·g by the two-loop recursion."""
        q = -g
        if not self.history:
            return q
        alpha = []
        for s, y, rho in reversed(self.history):
            a = rho * float(s @ q)
            q = q - a * y
            alpha.append(a)
        s, y, _ = self.history[-1]
        r = q * (float(s @ y) / float(y @ y))
        for (s, y, rho), a in zip(self.history, reversed(alpha)):
            b = rho * float(y @ r)
            r = r + (a - b) * s
        return r


def _cubic_interpolate(x1, f1, g1, x2, f2, g2, bounds=None):
    """Minimizer of the cubic through (x1, f1, g1), (x2, f2, g2), clamped to
    the bounds; the midpoint when the cubic has no real minimizer."""

    if bounds is not None:
        xmin_bound, xmax_bound = bounds
    else:
        xmin_bound, xmax_bound = (x1, x2) if x1 <= x2 else (x2, x1)
    d1 = g1 + g2 - 3 * (f1 - f2) / (x1 - x2)
    d2_square = d1 ** 2 - g1 * g2
    if d2_square >= 0:
        d2 = math.sqrt(d2_square)
        if x1 <= x2:
            min_pos = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2 * d2))
        else:
            min_pos = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2 * d2))
        if math.isfinite(min_pos):
            return min(max(min_pos, xmin_bound), xmax_bound)
    return (xmin_bound + xmax_bound) / 2


def strong_wolfe(fg, theta, t, d, f, g, gtd, c1=1e-4, c2=0.9, tolerance_change=1e-9, max_ls=25):
    """Bracketing then zoom search for a step t along d with

        f(θ + t d) ≤ f + c1·t·gtd   and   |∇f(θ + t d)·d| ≤ c2·|gtd|.

    Returns (f_new, g_new, t, evals); t is 0 if no decrease was found."""

    d_norm = float(d.abs().max())
    f_new, g_new = fg(theta + t * d)
    evals = 1
    gtd_new = float(g_new @ d)

    t_prev, f_prev, g_prev, gtd_prev = 0.0, f, g, gtd
    done = False
    ls_iter = 0
    bracket = None
    while ls_iter < max_ls:
        if f_new > f + c1 * t * gtd or (ls_iter > 1 and f_new >= f_prev):
            bracket = [t_prev, t], [f_prev, f_new], [g_prev, g_new], [gtd_prev, gtd_new]
            break
        if abs(gtd_new) <= -c2 * gtd:
            bracket = [t], [f_new], [g_new], [gtd_new]
            done = True
            break
        if gtd_new >= 0:
            bracket = [t_prev, t], [f_prev, f_new], [g_prev, g_new], [gtd_prev, gtd_new]
            break

        min_step = t + 0.01 * (t - t_prev)
        max_step = t * 10
        t_next = _cubic_interpolate(t_prev, f_prev, gtd_prev, t, f_new, gtd_new, bounds=(min_step, max_step))
        t_prev, f_prev, g_prev, gtd_prev = t, f_new, g_new, gtd_new
        t = t_next
        f_new, g_new = fg(theta + t * d)
        evals += 1
        gtd_new = float(g_new @ d)
        ls_iter += 1

    if bracket is None:
        bracket = [0.0, t], [f, f_new], [g, g_new], [gtd, gtd_new]
    b_t, b_f, b_g, b_gtd = (list(v) for v in bracket)

    insuf_progress = False
    low, high = (0, 1) if b_f[0] <= b_f[-1] else (1, 0)
    while not done and ls_iter < max_ls:
        if abs(b_t[1] - b_t[0]) * d_norm < tolerance_change:
            break
        t = _cubic_interpolate(b_t[0], b_f[0], b_gtd[0], b_t[1], b_f[1], b_gtd[1])

        # Keep the trial point away from the bracket ends.
        eps = 0.1 * (max(b_t) - min(b_t))
        if min(max(b_t) - t, t - min(b_t)) < eps:
            if insuf_progress or t >= max(b_t) or t <= min(b_t):
                t = max(b_t) - eps if abs(t - max(b_t)) < abs(t - min(b_t)) else min(b_t) + eps
                insuf_progress = False
            else:
                insuf_progress = True
        else:
            insuf_progress = False

        f_new, g_new = fg(theta + t * d)
        evals += 1
        gtd_new = float(g_new @ d)
        ls_iter += 1

        if f_new > f + c1 * t * gtd or f_new >= b_f[low]:
            b_t[high], b_f[high], b_g[high], b_gtd[high] = t, f_new, g_new, gtd_new
            low, high = (0, 1) if b_f[0] <= b_f[1] else (1, 0)
        else:
            if abs(gtd_new) <= -c2 * gtd:
                done = True
            elif gtd_new * (b_t[high] - b_t[low]) >= 0:
                b_t[high], b_f[high], b_g[high], b_gtd[high] = b_t[low], b_f[low], b_g[low], b_gtd[low]
            b_t[low], b_f[low], b_g[low], b_gtd[low] = t, f_new, g_new, gtd_new

    return b_f[low], b_g[low], b_t[low], evals


def lbfgs_minimize(loss_and_grad, theta0, max_iters, m=10, callback=None, state=None):
    """Limited-memory BFGS with a strong-Wolfe line search.

    One iteration is one accepted step. A failed line search clears the
    history and retries along −g once; a second failure ends the run
    with status "line_search_failed". Each row records the step and
    whether both Wolfe conditions held at the accepted point."""

    state = state or LbfgsState(m=m)
    trace = OptimTrace()

    def fg(theta):
        loss, grad = loss_and_grad(theta)
        trace.evals += 1
        if not math.isfinite(loss) or not torch.isfinite(grad).all():
            return math.inf, torch.zeros_like(grad)
        return loss, grad

    theta = theta0.clone()
    loss, grad = loss_and_grad(theta)
    trace.evals += 1
    _check_finite(loss, grad, 0)
    trace.rows.append({"iter": 0, "loss": loss, "grad_norm": float(grad.norm()), "step": 0.0,
                       "evals": 1, "armijo": True, "curvature": True})
    if callback is not None:
        callback(0, theta, loss)

    k = 0
    retried = False
    while k < max_iters:
        if float(grad.norm()) <= state.tolerance_grad:
            trace.status = "converged"
            break

        d = state.direction(grad)
        gtd = float(grad @ d)
        if not gtd < 0:
            state.history.clear()
            d = -grad
            gtd = float(grad @ d)
        t = min(1.0, 1.0 / float(grad.abs().sum())) if not state.history else 1.0

        evals_before = trace.evals
        f_new, g_new, t, _ = strong_wolfe(fg, theta, t, d, loss, grad, gtd, state.c1, state.c2,
                                          state.tolerance_change, state.max_ls)
        armijo = t > 0 and f_new <= loss + state.c1 * t * gtd
        if not armijo:
            if retried:
                trace.status = "line_search_failed"
                break
            state.history.clear()
            retried = True
            continue

        curvature = abs(float(g_new @ d)) <= state.c2 * abs(gtd)
        s = t * d
        state.store(s, g_new - grad)
        theta = theta + s
        loss, grad = f_new, g_new
        k += 1
        retried = False
        trace.rows.append({"iter": k, "loss": loss, "grad_norm": float(grad.norm()), "step": t,
                           "evals": trace.evals - evals_before, "armijo": armijo, "curvature": curvature})
        if callback is not None:
            callback(k, theta, loss)
    else:
        if float(grad.norm()) <= state.tolerance_grad:
            trace.status = "converged"

    return theta, trace
