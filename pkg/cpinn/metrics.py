import dataclasses
import enum
import torch

from .errors import MetricError
from .loss import objective_J


EVAL_SEED = 2**32 + 2023
EVAL_POINTS = 100000

METRIC_COLUMNS = ["method", "e2_y", "einf_y", "e2_u", "einf_u", "J", "time_s"]


class Norm(enum.Enum):
    L2 = "L2"
    LINF = "Linf"


@dataclasses.dataclass(frozen=True)
class MetricRow:
    method: str
    e2_y: float
    einf_y: float
    e2_u: float
    einf_u: float
    J: float
    time_s: float

    def as_row(self):
        return [getattr(self, name) for name in METRIC_COLUMNS]

    @classmethod
    def failed(cls, method, time_s=float("nan")):
        nan = float("nan")
        return cls(method, nan, nan, nan, nan, nan, time_s)


def field_values(field, x):
    """Values of a field (network, closure or tensor of values) as float64."""
    if torch.is_tensor(field):
        return field.to(torch.float64)
    dtype = getattr(field, "dtype", x.dtype)
    with torch.no_grad():
        return field(x.to(dtype)).to(torch.float64)


def relative_error(approx, exact, samples, norm=Norm.L2):
    """‖approx − exact‖ / ‖exact‖ over the sample points; the L² ratio is
    taken between root mean squares, the L∞ ratio between maxima."""

    x = samples.points
    a, e = field_values(approx, x), field_values(exact, x)
    if Norm(norm) is Norm.L2:
        num, den = (a - e).pow(2).mean().sqrt(), e.pow(2).mean().sqrt()
    else:
        num, den = (a - e).abs().max(), e.abs().max()
    if not den > 0:
        raise MetricError("reference field vanishes on the evaluation samples")
    return float(num / den)


class Evaluator:
    """Errors against the exact solution on a held-out interior sample."""

    def __init__(self, problem, n=EVAL_POINTS, seed=EVAL_SEED):
        self.problem = problem
        self.samples = problem.domain.sample_interior(n, seed)
        x = self.samples.points
        self.y_exact = problem.exact_y(x) if problem.exact_y is not None else None
        self.u_exact = problem.exact_u(x) if problem.exact_u is not None else None

    def errors(self, y_field, u_field):
        nan = float("nan")
        if self.y_exact is None:
            return {"e2_y": nan, "einf_y": nan, "e2_u": nan, "einf_u": nan}
        x = self.samples.points
        y, u = field_values(y_field, x), field_values(u_field, x)
        return {
            "e2_y": relative_error(y, self.y_exact, self.samples, Norm.L2),
            "einf_y": relative_error(y, self.y_exact, self.samples, Norm.LINF),
            "e2_u": relative_error(u, self.u_exact, self.samples, Norm.L2),
            "einf_u": relative_error(u, self.u_exact, self.samples, Norm.LINF),
        }

    def objective(self, y_field, u_field):
        x = self.samples.points
        y, u = field_values(y_field, x), field_values(u_field, x)
        return float(objective_J(y, u, self.samples, self.problem.y_d, self.problem.lam))

    def metrics(self, method, y_field, u_field, time_s):
        return MetricRow(method, **self.errors(y_field, u_field),
                         J=self.objective(y_field, u_field), time_s=time_s)
