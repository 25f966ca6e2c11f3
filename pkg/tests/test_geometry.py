import math
import pytest
import torch

from cpinn import (Annulus, Hypercube, SampleKind, UnitSquareWithSubregion, evaluation_grid, measures,
                   sample_boundary, sample_interior)


def test_measures():
    assert measures(Annulus(1, 3)) == pytest.approx((8 * math.pi, 8 * math.pi))
    assert measures(Hypercube(4)) == (1.0, 8.0)
    assert measures(UnitSquareWithSubregion()) == (1.0, 4.0)


def test_invalid_domains():
    with pytest.raises(ValueError):
        Annulus(3, 1)
    with pytest.raises(ValueError):
        Hypercube(0)


@pytest.mark.parametrize("domain", [Annulus(1, 3), Hypercube(2), Hypercube(4), UnitSquareWithSubregion()])
def test_samples_lie_in_the_domain(domain):
    interior = sample_interior(domain, 2000, 1)
    boundary = sample_boundary(domain, 500, 1)
    assert interior.points.shape == (2000, domain.dim)
    assert interior.kind is SampleKind.INTERIOR
    assert domain.contains(interior.points).all()
    assert domain.on_boundary(boundary.points, tol=1e-12).all()
    assert boundary.support_measure == domain.surface()


def test_sampling_is_deterministic():
    domain = Annulus()
    a, b = domain.sample_interior(100, 5), domain.sample_interior(100, 5)
    assert torch.equal(a.points, b.points)
    assert not torch.equal(a.points, domain.sample_interior(100, 6).points)
    prefix = domain.sample_interior(50, 5)
    assert not torch.equal(prefix.points, domain.sample_boundary(50, 5).points)


def test_empty_sample():
    samples = Hypercube(3).sample_boundary(0, 1)
    assert len(samples) == 0
    assert samples.points.shape == (0, 3)


def test_annulus_interior_is_area_uniform():
    # E[r²] = (r_in² + r_out²) / 2 for the uniform area measure.
    x = Annulus(1, 3).sample_interior(100000, 2).points
    assert float((x * x).sum(-1).mean()) == pytest.approx(5.0, abs=0.05)


def test_annulus_boundary_split():
    x = Annulus(1, 3).sample_boundary(40000, 3).points
    outer = float((x.norm(dim=-1) > 2).double().mean())
    assert outer == pytest.approx(0.75, abs=0.02)


def test_hypercube_facets_are_balanced():
    domain = Hypercube(3)
    facets = domain.facet_index(domain.sample_boundary(60000, 4).points)
    counts = torch.bincount(facets, minlength=6).double() / 60000
    assert torch.allclose(counts, torch.full((6,), 1 / 6, dtype=torch.float64), atol=0.01)


def test_monte_carlo_integral():
    # ∫ r² over the annulus = 2π ∫₁³ r³ dr = 40π.
    samples = Annulus(1, 3).sample_interior(200000, 9)
    estimate = samples.quadrature_weight * float((samples.points ** 2).sum())
    assert estimate == pytest.approx(40 * math.pi, rel=0.01)


def test_subregion_is_closed():
    domain = UnitSquareWithSubregion()
    x = torch.tensor([[0.25, 0.5], [0.75, 0.75], [0.8, 0.5]], dtype=torch.float64)
    assert domain.in_subregion(x).tolist() == [True, True, False]


def test_evaluation_grid():
    points, mask, extent = evaluation_grid(Annulus(1, 3), 21)
    assert points.shape == (441, 2)
    assert extent == (-3.0, 3.0, -3.0, 3.0)
    assert not mask[10, 10]
    assert mask[10, 0]

    points, mask, _ = evaluation_grid(Hypercube(4), 10)
    assert (points[:, 2:] == 0.5).all()
    assert mask.all()


def test_save_points(tmp_path):
    path = tmp_path / "points" / "interior.txt"
    Hypercube(2).sample_interior(7, 1).save(str(path))
    assert len(path.read_text().splitlines()) == 7
