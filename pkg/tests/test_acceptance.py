"""Full-budget runs on the benchmarks; slow, run with `pytest -m slow`."""

import json
import os
import numpy
import pytest

import cpinn
import utils
from cpinn import Evaluator, SolverConfig, load_problem

pytestmark = pytest.mark.slow

EXPERIMENTS = os.path.join(os.path.dirname(__file__), "..", "experiments")


def solve(name, method="cpinn", **overrides):
    problem = load_problem(name)
    cfg = SolverConfig.for_problem(name, method, **overrides)
    return problem, cpinn.SOLVERS[cfg.method](problem, cfg, evaluator=Evaluator(problem)).solve()


def test_ex1_cpinn():
    _, report = solve("ex1_annulus", iters=5000, log_interval=100)
    assert report.metrics.e2_y <= 1e-3
    assert report.metrics.e2_u <= 5e-2


def test_ex2_cpinn_respects_the_box():
    problem, report = solve("ex2_annulus_box", iters=5000, log_interval=100)
    assert report.metrics.e2_u <= 1e-1
    u = cpinn.field_values(report.control, Evaluator(problem, n=5000).samples.points)
    assert float(u.min()) >= problem.bounds.lower
    assert float(u.max()) <= problem.bounds.upper


def test_ex4_cpinn():
    _, report = solve("ex4_semilinear", iters=5000, log_interval=100)
    assert report.metrics.e2_u <= 1e-2


def test_ex3_reduced():
    _, report = solve("ex3_hypercube4", hidden=(40, 40, 40, 40), n_d=10000, n_b=2000, iters=10000,
                      milestones=(5000, 8000), precision=64, log_interval=500)
    assert report.metrics.e2_u <= 2e-1


def test_methods_ordering_on_the_annulus(tmp_path):
    with open(os.path.join(EXPERIMENTS, "ex1_compare.json")) as file:
        experiment = json.load(file)
    experiment["output"] = dict(experiment.get("output", {}), dir=str(tmp_path / "compare"), heatmaps=False)
    path = tmp_path / "ex1_compare.json"
    path.write_text(json.dumps(experiment))
    assert cpinn.run_comparison(str(path)) == cpinn.EXIT_OK

    ordered = 0
    for seed in experiment["seeds"]:
        header, rows = utils.read_table(str(tmp_path / "compare" / f"comparison_seed{seed}.csv"))
        by_method = {row[0]: dict(zip(header, row)) for row in rows}
        assert list(by_method) == ["cpinn", "aonn", "pm", "alm"]
        for method, row in by_method.items():
            assert row["e2_y"] <= 1e-2, (seed, method)
        e2_u = {method: row["e2_u"] for method, row in by_method.items()}
        ordered += e2_u["cpinn"] <= e2_u["pm"] and e2_u["cpinn"] <= e2_u["alm"]
    assert ordered >= 4


def test_penalty_degrades_with_a_large_initial_weight():
    # Same final weight for both paths.
    budget = dict(pm_mu_max=128.0, pm_iters=(6000, 1000), log_interval=500)
    _, small = solve("ex1_annulus", "pm", pm_mu0=0.1, **budget)
    _, large = solve("ex1_annulus", "pm", pm_mu0=6.4, **budget)
    assert small.extras["stages"][-1]["mu"] == large.extras["stages"][-1]["mu"] == 128.0
    assert large.metrics.e2_u >= 3 * small.metrics.e2_u



def test_cpinn_is_stable_across_seeds():
    errors = [solve("ex1_annulus", iters=3000, seed=seed, log_interval=100)[1].metrics.e2_u for seed in (1, 2, 3)]
    assert max(errors) <= 10 * min(errors)
    assert numpy.all(numpy.isfinite(errors))


def test_full_selftest():
    assert cpinn.run_selftest()
