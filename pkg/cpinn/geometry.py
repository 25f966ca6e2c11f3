from abc import ABC, abstractmethod
import dataclasses
import enum
import math
import numpy
import torch

import utils


class SampleKind(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"


@dataclasses.dataclass(frozen=True, eq=False)
class SampleSet:
    """Collocation points with the measure of the set they are uniform on."""

    points: torch.Tensor
    support_measure: float
    kind: SampleKind
    seed: int

    def __len__(self):
        return self.points.shape[0]

    @property
    def quadrature_weight(self):
        return self.support_measure / len(self)

    def to(self, dtype):
        return dataclasses.replace(self, points=self.points.to(dtype))

    def save(self, path):
        """One point per line, coordinates separated by spaces."""
        utils.create_folders_if_necessary(path)
        numpy.savetxt(path, self.points.detach().to(torch.float64).numpy(), fmt="%.17g")


class Domain(ABC):
    """An abstraction of a bounded domain Ω ⊂ ℝ^d.

    Subclasses give the measures of Ω and ∂Ω, uniform samplers of both,
    and a membership test used by the heatmaps and the tests."""

    dim = None

    def measures(self):
        return self.volume(), self.surface()

    @abstractmethod
    def volume(self):
        pass

    @abstractmethod
    def surface(self):
        pass

    @abstractmethod
    def _sample_interior(self, rng, n):
        pass

    @abstractmethod
    def _sample_boundary(self, rng, n):
        pass

    @abstractmethod
    def contains(self, x, tol=0.0):
        pass

    @abstractmethod
    def on_boundary(self, x, tol=1e-12):
        pass

    @abstractmethod
    def bounding_box(self):
        pass

    def sample_interior(self, n, seed):
        rng = utils.make_rng(seed, utils.STREAM_INTERIOR)
        points = self._sample_interior(rng, n) if n > 0 else numpy.zeros((0, self.dim))
        return SampleSet(torch.from_numpy(points), self.volume(), SampleKind.INTERIOR, seed)

    def sample_boundary(self, n, seed):
        rng = utils.make_rng(seed, utils.STREAM_BOUNDARY)
        points = self._sample_boundary(rng, n) if n > 0 else numpy.zeros((0, self.dim))
        return SampleSet(torch.from_numpy(points), self.surface(), SampleKind.BOUNDARY, seed)


class Annulus(Domain):
    """{x ∈ ℝ² : r_in ≤ |x| ≤ r_out}."""

    dim = 2

    def __init__(self, r_in=1.0, r_out=3.0):
        if not 0 < r_in < r_out:
            raise ValueError(f"annulus radii must satisfy 0 < r_in < r_out, got ({r_in}, {r_out})")
        self.r_in = float(r_in)
        self.r_out = float(r_out)

    def __repr__(self):
        return f"Annulus({self.r_in:g}, {self.r_out:g})"

    def volume(self):
        return math.pi * (self.r_out ** 2 - self.r_in ** 2)

    def surface(self):
        return 2 * math.pi * (self.r_in + self.r_out)

    def _sample_interior(self, rng, n):
        u, v = rng.random(n), rng.random(n)
        r = numpy.sqrt(self.r_in ** 2 + u * (self.r_out ** 2 - self.r_in ** 2))
        phi = 2 * math.pi * v
        return numpy.stack([r * numpy.cos(phi), r * numpy.sin(phi)], axis=1)

    def _sample_boundary(self, rng, n):
        outer = rng.random(n) < self.r_out / (self.r_in + self.r_out)
        phi = 2 * math.pi * rng.random(n)
        r = numpy.where(outer, self.r_out, self.r_in)
        return numpy.stack([r * numpy.cos(phi), r * numpy.sin(phi)], axis=1)

    def contains(self, x, tol=0.0):
        r = torch.as_tensor(x).norm(dim=-1)
        return (r >= self.r_in - tol) & (r <= self.r_out + tol)

    def on_boundary(self, x, tol=1e-12):
        r = torch.as_tensor(x).norm(dim=-1)
        return ((r - self.r_in).abs() <= tol) | ((r - self.r_out).abs() <= tol)

    def bounding_box(self):
        return [(-self.r_out, self.r_out)] * 2


class Hypercube(Domain):
    """The open unit cube (0, 1)^d."""

    def __init__(self, dim):
        if dim < 1:
            raise ValueError(f"hypercube dimension must be ≥ 1, got {dim}")
        self.dim = int(dim)

    def __repr__(self):
        return f"Hypercube({self.dim})"

    def volume(self):
        return 1.0

    def surface(self):
        return 2.0 * self.dim

    def _sample_interior(self, rng, n):
        return rng.random((n, self.dim))

    def _sample_boundary(self, rng, n):
        facet = rng.integers(0, 2 * self.dim, size=n)
        points = rng.random((n, self.dim))
        points[numpy.arange(n), facet // 2] = (facet % 2).astype(numpy.float64)
        return points

    def contains(self, x, tol=0.0):
        x = torch.as_tensor(x)
        return ((x >= -tol) & (x <= 1 + tol)).all(dim=-1)

    def on_boundary(self, x, tol=1e-12):
        x = torch.as_tensor(x)
        return self.contains(x, tol) & ((x.abs() <= tol) | ((x - 1).abs() <= tol)).any(dim=-1)

    def facet_index(self, x, tol=1e-12):
        """Index 2i + s of the facet {x_i = s} each boundary point lies on."""
        x = torch.as_tensor(x)
        low = x.abs() <= tol
        high = (x - 1).abs() <= tol
        i = (low | high).to(torch.int64).argmax(dim=-1)
        return 2 * i + high.gather(-1, i[:, None])[:, 0].to(torch.int64)

    def bounding_box(self):
        return [(0.0, 1.0)] * self.dim


class UnitSquareWithSubregion(Hypercube):
    """(0, 1)² with the marked closed subregion ω = [0.25, 0.75]²."""

    def __init__(self, lower=0.25, upper=0.75):
        super().__init__(2)
        self.lower = lower
        self.upper = upper

    def __repr__(self):
        return f"UnitSquareWithSubregion([{self.lower:g}, {self.upper:g}]²)"

    def in_subregion(self, x):
        x = torch.as_tensor(x)
        return ((x >= self.lower) & (x <= self.upper)).all(dim=-1)


def measures(domain):
    return domain.measures()


def sample_interior(domain, n, seed):
    return domain.sample_interior(n, seed)


def sample_boundary(domain, n, seed):
    return domain.sample_boundary(n, seed)


def evaluation_grid(domain, n=200, fixed=0.5):
    """An n × n grid over the first two coordinates of the bounding box,
    the remaining coordinates held at `fixed`.

    Returns (points, mask, extent) where mask flags the grid points inside
    the domain."""

    (x0, x1), (y0, y1) = domain.bounding_box()[:2]
    xs = torch.linspace(x0, x1, n, dtype=torch.float64)
    ys = torch.linspace(y0, y1, n, dtype=torch.float64)
    X, Y = torch.meshgrid(xs, ys, indexing="xy")
    points = torch.full((n * n, domain.dim), fixed, dtype=torch.float64)
    points[:, 0] = X.reshape(-1)
    points[:, 1] = Y.reshape(-1)
    mask = domain.contains(points).reshape(n, n)
    return points, mask, (x0, x1, y0, y1)
