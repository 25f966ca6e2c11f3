import json
import pytest

import cpinn


def _small_config(problem_name, method="cpinn", **overrides):
    settings = dict(hidden=(8, 8), n_d=200, n_b=60, iters=15, aonn_K=2, aonn_iters=(5, 3),
                    pm_K=2, pm_iters=(5, 3), alm_K=2, alm_iters=(5, 3), log_interval=5)
    settings.update(overrides)
    return cpinn.SolverConfig.for_problem(problem_name, method, **settings)


@pytest.fixture
def small_config():
    return _small_config


@pytest.fixture
def ex1():
    return cpinn.load_problem("ex1_annulus")


@pytest.fixture
def ex2():
    return cpinn.load_problem("ex2_annulus_box")


@pytest.fixture
def evaluator_for():
    def make(problem):
        return cpinn.Evaluator(problem, n=2000)
    return make


@pytest.fixture
def storage(tmp_path, monkeypatch):
    root = tmp_path / "storage"
    monkeypatch.setenv("CPINN_STORAGE", str(root))
    return root


@pytest.fixture
def write_experiment(tmp_path):
    """Write a small experiment file and return its path."""

    def write(name="experiment.json", **sections):
        d = {
            "problem": "ex1_annulus",
            "solver": {"method": "cpinn", "hidden": [6, 6], "n_d": 100, "n_b": 40, "iters": 8,
                       "aonn_K": 2, "aonn_iters": [4, 2], "pm_K": 2, "pm_iters": [4, 2],
                       "alm_K": 2, "alm_iters": [4, 2]},
            "evaluation": {"n_eval": 500, "grid": 20},
            "output": {"dir": str(tmp_path / "run"), "log_interval": 2},
        }
        d.update(sections)
        path = tmp_path / name
        path.write_text(json.dumps(d))
        return str(path)

    return write
