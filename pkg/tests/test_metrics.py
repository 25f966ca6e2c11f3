import math
import pytest
import torch

from cpinn import (EVAL_SEED, METRIC_COLUMNS, Evaluator, MetricError, MetricRow, Norm, relative_error)


def test_relative_error(ex1):
    samples = ex1.domain.sample_interior(1000, EVAL_SEED)
    y = ex1.exact_y
    assert relative_error(y, y, samples) == 0.0
    twice = 2 * y(samples.points)
    assert relative_error(twice, y, samples, Norm.L2) == pytest.approx(1.0)
    assert relative_error(twice, y, samples, Norm.LINF) == pytest.approx(1.0)


def test_vanishing_reference(ex1):
    samples = ex1.domain.sample_interior(100, 1)
    zero = torch.zeros(100, dtype=torch.float64)
    with pytest.raises(MetricError):
        relative_error(zero + 1, zero, samples)


def test_evaluator_on_the_exact_solution(ex2, evaluator_for):
    evaluator = evaluator_for(ex2)
    row = evaluator.metrics("exact", ex2.exact_y, ex2.exact_u, 1.5)
    assert (row.e2_y, row.einf_y, row.e2_u, row.einf_u) == (0.0, 0.0, 0.0, 0.0)
    assert row.J > 0
    assert row.as_row()[0] == "exact"
    assert len(row.as_row()) == len(METRIC_COLUMNS)


def test_evaluator_is_held_out(ex1):
    evaluator = Evaluator(ex1, n=500)
    training = ex1.domain.sample_interior(500, 1)
    assert not torch.equal(evaluator.samples.points, training.points)
    assert torch.equal(evaluator.samples.points, Evaluator(ex1, n=500).samples.points)


def test_failed_row():
    row = MetricRow.failed("pm", 3.0)
    assert math.isnan(row.e2_u)
    assert row.time_s == 3.0
