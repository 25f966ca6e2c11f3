import enum
import torch


class ActivationKind(enum.Enum):
    TANH = "tanh"
    SIGMOID = "sigmoid"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError("unknown activation '{}', expected one of: {}".format(
                name, ", ".join(kind.value for kind in cls))) from None

    @property
    def eta(self):
        """Uniform bound on the third derivative."""
        return 2.0 if self is ActivationKind.TANH else 1.0


def activation_eval(kind, t):
    """Return ρ(t), ρ'(t), ρ''(t), ρ'''(t) from the closed forms in ρ.

    Both functions saturate to exact limits for large |t|, so the result
    is finite for every finite input."""

    if not torch.is_tensor(t):
        t = torch.as_tensor(t, dtype=torch.float64)
    if kind is ActivationKind.TANH:
        rho = torch.tanh(t)
        s = 1 - rho * rho
        return rho, s, -2 * rho * s, (6 * rho * rho - 2) * s
    if kind is ActivationKind.SIGMOID:
        rho = torch.sigmoid(t)
        s = rho * (1 - rho)
        return rho, s, s * (1 - 2 * rho), s * (1 - 6 * rho + 6 * rho * rho)
    raise ValueError(f"unknown activation {kind!r}")
