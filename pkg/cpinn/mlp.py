import dataclasses
import math
import numpy
import torch

import utils
from .activation import ActivationKind, activation_eval
from .errors import ShapeError


def check_widths(widths):
    widths = list(widths)
    if len(widths) < 2:
        raise ShapeError(f"widths must have at least 2 entries, got {widths}")
    for i, n in enumerate(widths):
        if isinstance(n, bool) or not isinstance(n, (int, numpy.integer)) or n < 1:
            raise ShapeError(f"widths[{i}] = {n!r} must be a positive integer")
    if widths[-1] != 1:
        raise ShapeError(f"widths[{len(widths) - 1}] = {widths[-1]} must be 1 (scalar output)")
    return tuple(int(n) for n in widths)


def param_count(widths):
    return sum(n_out * n_in + n_out for n_in, n_out in zip(widths[:-1], widths[1:]))


def flatten_layers(layers):
    """Concatenate (A, b) pairs layer by layer, weights before biases."""
    return torch.cat([t.reshape(-1) for A, b in layers for t in (A, b)])


@dataclasses.dataclass(frozen=True)
class FieldEval:
    """Value, input gradient and Laplacian of a scalar field.

    For a batch of N points the shapes are (N,), (N, d) and (N,); for a
    single point they are (), (d,) and ()."""

    value: torch.Tensor
    gradient: torch.Tensor
    laplacian: torch.Tensor


@dataclasses.dataclass(frozen=True, eq=False)
class Mlp:
    """A fully connected network x ↦ A⁽ᴸ⁾ρ(…ρ(A⁽¹⁾x + b⁽¹⁾)…) + b⁽ᴸ⁾.

    `theta` is the flat parameter vector; `bound` is the declared
    parameter bound R, used by the certificates only."""

    widths: tuple
    activation: ActivationKind
    theta: torch.Tensor
    bound: float = 1.0

    def __post_init__(self):
        if self.theta.ndim != 1 or self.theta.numel() != param_count(self.widths):
            raise ShapeError("theta has {} entries, widths {} need {}".format(
                self.theta.numel(), list(self.widths), param_count(self.widths)))

    @property
    def depth(self):
        return len(self.widths) - 1

    @property
    def dim(self):
        return self.widths[0]

    @property
    def num_params(self):
        return self.theta.numel()

    @property
    def dtype(self):
        return self.theta.dtype

    def layers(self):
        """Views (A⁽ℓ⁾, b⁽ℓ⁾) into theta, A⁽ℓ⁾ of shape n_ℓ × n_{ℓ−1}."""
        layers = []
        i = 0
        for n_in, n_out in zip(self.widths[:-1], self.widths[1:]):
            A = self.theta[i:i + n_out * n_in].view(n_out, n_in)
            i += n_out * n_in
            b = self.theta[i:i + n_out]
            i += n_out
            layers.append((A, b))
        return layers

    def with_theta(self, theta):
        return dataclasses.replace(self, theta=theta)

    def to(self, dtype):
        return self.with_theta(self.theta.to(dtype))

    def evaluate(self, x):
        return eval_field(self, x)

    def __call__(self, x):
        h, squeeze = _as_points(self, x)
        layers = self.layers()
        for A, b in layers[:-1]:
            h, _, _, _ = activation_eval(self.activation, h @ A.T + b)
        A, b = layers[-1]
        value = (h @ A.T + b)[:, 0]
        return value[0] if squeeze else value


def init_mlp(widths, kind, seed, bound=1.0, dtype=torch.float64):
    """Glorot-uniform weights and zero biases drawn from the (seed, init) stream."""

    widths = check_widths(widths)
    kind = ActivationKind.parse(kind)
    rng = utils.make_rng(seed, utils.STREAM_INIT)
    layers = []
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        a = math.sqrt(6 / (n_in + n_out))
        A = torch.from_numpy(rng.uniform(-a, a, size=(n_out, n_in)))
        layers.append((A, torch.zeros(n_out, dtype=torch.float64)))
    return Mlp(widths, kind, flatten_layers(layers).to(dtype), float(bound))


def scale_output(net, factor):
    """Multiply the last layer (weights and bias) by `factor`."""
    n_last = net.widths[-2] + 1
    theta = net.theta.clone()
    theta[-n_last:] *= factor
    return net.with_theta(theta)


def _as_points(net, x):
    x = torch.as_tensor(x, dtype=net.dtype)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.dim:
        raise ShapeError(f"points of shape {tuple(x.shape)} do not match input dimension {net.dim}")
    return x, squeeze


def eval_field(net, x):
    """Value, gradient and Laplacian of `net` at one point or a batch.

    Propagates, layer by layer, the activations h, their Jacobian J with
    respect to x and the per-coordinate second derivatives S:

        J⁽ℓ⁾ = ρ'(z)·A J⁽ℓ⁻¹⁾
        S⁽ℓ⁾ = ρ''(z)·(A J⁽ℓ⁻¹⁾)² + ρ'(z)·A S⁽ℓ⁻¹⁾

    The output layer is affine; the Laplacian is the sum of S over the
    input coordinates. The computation is differentiable in theta."""

    x, squeeze = _as_points(net, x)
    h, J, S = layer_jets(net, x)[-1]
    fe = FieldEval(h[:, 0], J[:, 0, :], S[:, 0, :].sum(-1))
    if squeeze:
        fe = FieldEval(fe.value[0], fe.gradient[0], fe.laplacian[0])
    return fe


def param_gradient(net, x, cotangent):
    """∂/∂θ of Σ_points [w_v·value + w_g·gradient + w_lap·laplacian].

    `cotangent` is (w_v, w_g, w_lap); each entry is either shared by all
    points or given per point."""

    w_v, w_g, w_lap = (torch.as_tensor(w, dtype=net.dtype) for w in cotangent)
    x, _ = _as_points(net, x)
    N, d = x.shape
    if w_g.ndim == 0 or w_g.shape[-1] != d or w_g.ndim > 2 or (w_g.ndim == 2 and w_g.shape[0] != N):
        raise ShapeError(f"gradient cotangent of shape {tuple(w_g.shape)} does not match {N} points in dimension {d}")
    for name, w in (("value", w_v), ("laplacian", w_lap)):
        if w.ndim > 1 or (w.ndim == 1 and w.shape[0] != N):
            raise ShapeError(f"{name} cotangent of shape {tuple(w.shape)} does not match {N} points")

    theta = net.theta.detach().clone().requires_grad_(True)
    fe = eval_field(net.with_theta(theta), x)
    s = (w_v * fe.value).sum() + (w_g * fe.gradient).sum() + (w_lap * fe.laplacian).sum()
    grad, = torch.autograd.grad(s, theta)
    return grad


def save_mlp(net, path):
    """Write theta as text, one %.17g value per line, after a header line
    `widths=2,30,1 activation=tanh bound=1`."""

    header = "widths={} activation={} bound={:.17g}".format(
        ",".join(str(n) for n in net.widths), net.activation.value, net.bound)
    utils.create_folders_if_necessary(path)
    numpy.savetxt(path, net.theta.detach().to(torch.float64).numpy(), fmt="%.17g", header=header)


def load_mlp(path, dtype=torch.float64):
    with open(path) as file:
        header = file.readline().lstrip("#").split()
    fields = dict(item.split("=", 1) for item in header)
    widths = check_widths(int(n) for n in fields["widths"].split(","))
    theta = numpy.atleast_1d(numpy.loadtxt(path, dtype=numpy.float64))
    return Mlp(widths, ActivationKind.parse(fields["activation"]),
               torch.from_numpy(theta).to(dtype), float(fields["bound"]))


def layer_jets(net, x):
    """Per layer ℓ = 1..L, the activations (N, n_ℓ), their Jacobian
    (N, n_ℓ, d) and second derivatives along each axis (N, n_ℓ, d)."""

    x, _ = _as_points(net, x)
    N, d = x.shape
    h = x
    J = torch.eye(d, dtype=x.dtype).expand(N, d, d)
    S = torch.zeros(N, d, d, dtype=x.dtype)
    jets = []
    layers = net.layers()
    for ell, (A, b) in enumerate(layers):
        z = h @ A.T + b
        Jz = torch.einsum("ij,njd->nid", A, J)
        Sz = torch.einsum("ij,njd->nid", A, S)
        if ell == len(layers) - 1:
            h, J, S = z, Jz, Sz
        else:
            rho, rho1, rho2, _ = activation_eval(net.activation, z)
            h = rho
            J = rho1[..., None] * Jz
            S = rho2[..., None] * Jz * Jz + rho1[..., None] * Sz
        jets.append((h, J, S))
    return jets
