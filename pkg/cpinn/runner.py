import dataclasses
import json
import logging
import multiprocessing
import os
import sys
import time
import numpy
import tensorboardX
import torch

import utils
from .errors import ConfigError, CpinnError, ProblemError, SolverDiverged
from .geometry import evaluation_grid
from .metrics import EVAL_POINTS, EVAL_SEED, METRIC_COLUMNS, Evaluator, MetricRow, field_values
from .mlp import load_mlp, save_mlp
from .problems import make_problem, verify_manufactured
from .solvers import SOLVERS, TRACE_COLUMNS, Method, SolverConfig, reported_control

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_MISSING = 1
EXIT_CONFIG_INVALID = 2
EXIT_OUTPUT = 3
EXIT_DIVERGED = 4
EXIT_CHECK_FAILED = 5

SECTIONS = ("problem", "solver", "evaluation", "output", "precision", "methods", "seeds", "workers")
EVALUATION_KEYS = ("n_eval", "seed", "grid")
OUTPUT_KEYS = ("dir", "checkpoint_interval", "log_interval", "heatmaps", "dump_points")


def _reject_unknown(section, allowed, what):
    if not isinstance(section, dict):
        raise ConfigError(f"{what} must be a JSON object, got {section!r}")
    unknown = utils.unknown_keys(section, allowed)
    if unknown:
        raise ConfigError("unknown {}: {} (allowed: {})".format(what, ", ".join(unknown), ", ".join(allowed)))


@dataclasses.dataclass
class ExperimentConfig:
    """A parsed experiment file.

    `solver` holds SolverConfig overrides on top of the benchmark defaults;
    `precision` and `log_interval` are only forwarded when set."""

    problem: object
    solver: dict
    methods: list
    seeds: list
    n_eval: int = EVAL_POINTS
    eval_seed: int = EVAL_SEED
    grid: int = 200
    output_dir: str = None
    checkpoint_interval: int = 0
    log_interval: int = None
    heatmaps: bool = True
    dump_points: bool = False
    precision: int = None
    workers: int = 1

    @classmethod
    def from_dict(cls, d):
        _reject_unknown(d, SECTIONS, "section")
        if "problem" not in d:
            raise ConfigError("missing section 'problem'")
        solver = dict(d.get("solver", {}))
        _reject_unknown(solver, SolverConfig.keys(), "solver key")
        evaluation = d.get("evaluation", {})
        _reject_unknown(evaluation, EVALUATION_KEYS, "evaluation key")
        output = d.get("output", {})
        _reject_unknown(output, OUTPUT_KEYS, "output key")

        method = solver.pop("method", Method.CPINN.value)
        seed = solver.pop("seed", 1)
        if "precision" in d and "precision" in solver:
            raise ConfigError("precision is set both at top level and in the solver section")
        precision = d.get("precision", solver.pop("precision", None))
        experiment = cls(
            problem=d["problem"],
            solver=solver,
            methods=[Method.parse(m).value for m in d.get("methods", [method])],
            seeds=list(d.get("seeds", [seed])),
            n_eval=evaluation.get("n_eval", EVAL_POINTS),
            eval_seed=evaluation.get("seed", EVAL_SEED),
            grid=evaluation.get("grid", 200),
            output_dir=output.get("dir"),
            checkpoint_interval=output.get("checkpoint_interval", 0),
            log_interval=output.get("log_interval"),
            heatmaps=output.get("heatmaps", True),
            dump_points=output.get("dump_points", False),
            precision=precision,
            workers=d.get("workers", 1),
        )
        experiment.validate()
        return experiment

    def validate(self):
        def need(condition, message):
            if not condition:
                raise ConfigError(message)

        need(isinstance(self.problem, (str, dict)), "problem must be a benchmark name or a family definition")
        need(len(self.methods) >= 1, "methods must list at least one method")
        need(len(self.seeds) >= 1 and all(isinstance(s, int) and s >= 0 for s in self.seeds),
             f"seeds must be non-negative integers, got {self.seeds}")
        need(isinstance(self.n_eval, int) and self.n_eval >= 1, f"evaluation.n_eval must be ≥ 1, got {self.n_eval}")
        need(isinstance(self.grid, int) and self.grid >= 2, f"evaluation.grid must be ≥ 2, got {self.grid}")
        need(isinstance(self.checkpoint_interval, int) and self.checkpoint_interval >= 0,
             "output.checkpoint_interval must be ≥ 0")
        need(self.precision in (None, 32, 64), f"precision must be 32 or 64, got {self.precision}")
        need(isinstance(self.workers, int) and self.workers >= 1, f"workers must be ≥ 1, got {self.workers}")
        for method in self.methods:
            self.solver_config(self.problem_name, method, self.seeds[0])

    @property
    def problem_name(self):
        if isinstance(self.problem, str):
            return self.problem
        return self.problem.get("name", self.problem.get("family"))

    def with_overrides(self, seed=None, precision=None):
        experiment = self
        if seed is not None:
            experiment = dataclasses.replace(experiment, seeds=[seed])
        if precision is not None:
            experiment = dataclasses.replace(experiment, precision=precision)
        experiment.validate()
        return experiment

    def solver_config(self, problem_name, method, seed):
        overrides = dict(self.solver, seed=seed)
        if self.precision is not None:
            overrides["precision"] = self.precision
        if self.log_interval is not None:
            overrides["log_interval"] = self.log_interval
        try:
            return SolverConfig.for_problem(problem_name, method, **overrides)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def as_dict(self):
        return {
            "problem": self.problem,
            "solver": self.solver,
            "evaluation": {"n_eval": self.n_eval, "seed": self.eval_seed, "grid": self.grid},
            "output": {"dir": self.output_dir, "checkpoint_interval": self.checkpoint_interval,
                       "log_interval": self.log_interval, "heatmaps": self.heatmaps,
                       "dump_points": self.dump_points},
            "precision": self.precision,
            "methods": self.methods,
            "seeds": self.seeds,
            "workers": self.workers,
        }


def load_experiment(path):
    """Parse an experiment file; OSError if unreadable, ConfigError if invalid."""
    try:
        d = utils.load_json(utils.get_experiment_path(path))
    except ValueError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from None
    return ExperimentConfig.from_dict(d)


def _prepare(config_path, seed, precision):
    """Load the experiment and its problem, mapping failures to exit codes."""
    try:
        experiment = load_experiment(config_path).with_overrides(seed, precision)
        problem = make_problem(experiment.problem)
    except OSError as e:
        logger.error(f"cannot read experiment {config_path}: {e}")
        return EXIT_CONFIG_MISSING, None, None
    except (ConfigError, ProblemError) as e:
        logger.error(f"invalid experiment {config_path}: {e}")
        return EXIT_CONFIG_INVALID, None, None
    return EXIT_OK, experiment, problem


def _prepare_dir(run_dir):
    try:
        utils.check_writable(run_dir)
    except OSError as e:
        logger.error(f"cannot write to {run_dir}: {e}")
        return EXIT_OUTPUT
    return EXIT_OK


# Artifacts


def save_nets(run_dir, nets, iteration=None):
    for field, net in nets.items():
        save_mlp(net, utils.get_checkpoint_path(run_dir, field, iteration))


def load_nets(run_dir, fields, dtype=torch.float64):
    return {field: load_mlp(utils.get_checkpoint_path(run_dir, field), dtype) for field in fields}


def save_heatmaps(run_dir, problem, y_field, u_field, n=200):
    """u*, |u* − ū| and y* on an n × n grid; for d > 2 a cross-section at 0.5."""

    points, mask, extent = evaluation_grid(problem.domain, n)
    mask = mask.numpy()
    u = field_values(u_field, points).reshape(n, n).numpy()
    y = field_values(y_field, points).reshape(n, n).numpy()
    utils.save_heatmap(os.path.join(run_dir, "u.png"), u, mask, extent, "u*")
    utils.save_heatmap(os.path.join(run_dir, "y.png"), y, mask, extent, "y*")
    if problem.exact_u is not None:
        u_bar = problem.exact_u(points).reshape(n, n).numpy()
        utils.save_heatmap(os.path.join(run_dir, "u_err.png"), numpy.abs(u - u_bar), mask, extent,
                           "|u* - u_bar|", cmap="magma")


def _jsonable(value):
    if torch.is_tensor(value):
        return value.tolist()
    return str(value)


def save_report(run_dir, report, experiment, problem):
    utils.save_table(os.path.join(run_dir, "metrics.csv"), METRIC_COLUMNS, [report.metrics.as_row()])
    save_nets(run_dir, report.nets)
    if report.extras:
        with open(os.path.join(run_dir, "extras.json"), "w") as file:
            json.dump(report.extras, file, default=_jsonable)
    if experiment.heatmaps:
        save_heatmaps(run_dir, problem, report.nets["y"], report.control, experiment.grid)


def recompute_metrics(run_dir, problem, cfg, evaluator, time_s):
    """Metrics of the networks saved in `run_dir`."""
    fields = ["y", "p"] if cfg.method is Method.CPINN else ["y", "u"]
    dtype = torch.float32 if cfg.precision == 32 else torch.float64
    nets = load_nets(run_dir, fields, dtype)
    return evaluator.metrics(cfg.method.value, nets["y"], reported_control(problem, cfg, nets), time_s)


def execute(experiment, problem, cfg, run_dir):
    """Run one solver in `run_dir`, streaming its trace; returns (status, report)."""

    txt_logger = utils.get_txt_logger(run_dir)
    txt_logger.info("{}\n".format(" ".join(sys.argv)))
    txt_logger.info("{}\n".format(json.dumps(experiment.as_dict(), default=str)))
    txt_logger.info("{}\n".format(json.dumps(cfg.as_dict(), default=str)))

    utils.seed(cfg.seed)

    def on_row(row):
        csv_logger.writerow([utils.format_cell(row[column]) for column in TRACE_COLUMNS])
        csv_file.flush()
        for column in TRACE_COLUMNS[1:]:
            tb_writer.add_scalar(column, row[column], row["iter"])

    def on_checkpoint(iteration, nets):
        if experiment.checkpoint_interval and iteration % experiment.checkpoint_interval == 0:
            save_nets(run_dir, nets, iteration)

    evaluator = Evaluator(problem, experiment.n_eval, experiment.eval_seed)
    solver = SOLVERS[cfg.method](problem, cfg, evaluator=evaluator, on_row=on_row, on_checkpoint=on_checkpoint)
    if experiment.dump_points:
        solver.interior.save(os.path.join(run_dir, "points", "interior.txt"))
        solver.boundary.save(os.path.join(run_dir, "points", "boundary.txt"))

    csv_file, csv_logger = utils.get_csv_logger(run_dir, "trace.csv", TRACE_COLUMNS, append=False)
    tb_writer = tensorboardX.SummaryWriter(run_dir)

    status = EXIT_OK
    try:
        report = solver.solve()
    except SolverDiverged as e:
        txt_logger.error(f"{cfg.method.value} diverged at iteration {e.iteration}: {e}")
        report = e.report
        status = EXIT_DIVERGED
    finally:
        csv_file.close()
        tb_writer.close()

    save_report(run_dir, report, experiment, problem)
    m = report.metrics
    txt_logger.info("e2_y {:.3e} | einf_y {:.3e} | e2_u {:.3e} | einf_u {:.3e} | J {:.4e} | T {:.1f}s".format(
        m.e2_y, m.einf_y, m.e2_u, m.einf_u, m.J, m.time_s))
    return status, report


def _run_name(problem, method, seed, config_hash):
    return f"{problem.name}_{method}_seed{seed}_{config_hash}"


# Commands


def run_experiment(config_path, seed=None, precision=None):
    """Run the first configured method with the first seed; returns an exit status."""

    status, experiment, problem = _prepare(config_path, seed, precision)
    if status != EXIT_OK:
        return status
    method, seed = experiment.methods[0], experiment.seeds[0]
    cfg = experiment.solver_config(problem.name, method, seed)

    run_dir = experiment.output_dir
    if run_dir is None:
        try:
            config_hash = utils.save_config_in_table(dict(experiment.as_dict(), run={"method": method, "seed": seed}))
        except OSError as e:
            logger.error(f"cannot write the configuration table: {e}")
            return EXIT_OUTPUT
        run_dir = utils.get_run_dir(_run_name(problem, method, seed, config_hash))
    status = _prepare_dir(run_dir)
    if status != EXIT_OK:
        return status
    status, _ = execute(experiment, problem, cfg, run_dir)
    return status


def _run_job(job):
    experiment, method, seed, run_dir = job
    start = time.time()
    try:
        problem = make_problem(experiment.problem)
        cfg = experiment.solver_config(problem.name, method, seed)
        status, report = execute(experiment, problem, cfg, run_dir)
    except (CpinnError, RuntimeError, OSError) as e:
        logger.error(f"{method} (seed {seed}) failed: {e}")
        return method, seed, MetricRow.failed(method, time.time() - start), []
    if status != EXIT_OK:
        return method, seed, MetricRow.failed(method, report.metrics.time_s), report.trace
    return method, seed, report.metrics, report.trace


def _suffix(seed, seeds):
    return "" if len(seeds) == 1 else f"_seed{seed}"


def summarize(rows):
    """mean/std/min/max of each metric per method over the finite rows."""
    summary = []
    for method in dict.fromkeys(row.method for row in rows):
        columns = {}
        for name in METRIC_COLUMNS[1:]:
            values = [getattr(row, name) for row in rows if row.method == method]
            values = [v for v in values if numpy.isfinite(v)]
            columns[name] = utils.synthesize(values) if values else None
        for statistic in ("mean", "std", "min", "max"):
            summary.append([method, statistic] + [
                float(columns[name][statistic]) if columns[name] else float("nan") for name in METRIC_COLUMNS[1:]])
    return summary


def run_comparison(config_path, seed=None, precision=None):
    """Run every configured method for every seed on the same problem.

    Writes comparison.csv (one row per method, METRIC_COLUMNS order) and
    dynamics_<method>.csv; with several seeds the files get a _seed<k>
    suffix and summary.csv aggregates them. A failing method is recorded
    as a row of NaN errors."""

    status, experiment, problem = _prepare(config_path, seed, precision)
    if status != EXIT_OK:
        return status

    base_dir = experiment.output_dir
    if base_dir is None:
        try:
            config_hash = utils.save_config_in_table(experiment.as_dict())
        except OSError as e:
            logger.error(f"cannot write the configuration table: {e}")
            return EXIT_OUTPUT
        base_dir = utils.get_run_dir(f"{problem.name}_compare_{config_hash}")
    status = _prepare_dir(base_dir)
    if status != EXIT_OK:
        return status

    jobs = [(experiment, method, seed, os.path.join(base_dir, f"seed{seed}", method))
            for seed in experiment.seeds for method in experiment.methods]
    if experiment.workers > 1:
        with multiprocessing.Pool(experiment.workers) as pool:
            results = pool.map(_run_job, jobs)
    else:
        results = [_run_job(job) for job in jobs]

    txt_logger = utils.get_txt_logger(base_dir)
    rows = []
    for seed in experiment.seeds:
        suffix = _suffix(seed, experiment.seeds)
        seed_rows = [row for method, s, row, _ in results if s == seed]
        utils.save_table(os.path.join(base_dir, f"comparison{suffix}.csv"), METRIC_COLUMNS,
                         [row.as_row() for row in seed_rows])
        for method, s, row, trace in results:
            if s == seed:
                utils.save_table(os.path.join(base_dir, f"dynamics_{method}{suffix}.csv"), TRACE_COLUMNS,
                                 [[r[c] for c in TRACE_COLUMNS] for r in trace])
        rows.extend(seed_rows)
        for row in seed_rows:
            txt_logger.info("seed {} | {} | e2_y {:.3e} | e2_u {:.3e} | J {:.4e} | T {:.1f}s".format(
                seed, row.method, row.e2_y, row.e2_u, row.J, row.time_s))
    if len(experiment.seeds) > 1:
        utils.save_table(os.path.join(base_dir, "summary.csv"), ["method", "statistic"] + METRIC_COLUMNS[1:],
                         summarize(rows))

    if all(numpy.isnan(row.e2_y) and numpy.isnan(row.J) for row in rows):
        return EXIT_DIVERGED
    return EXIT_OK


def parse_value(text):
    """Sweep values are JSON when they parse as JSON, strings otherwise."""
    try:
        return json.loads(text)
    except ValueError:
        return text


def run_sweep(config_path, key, values, seed=None, precision=None):
    """Rerun the first configured method with `key` set to each value;
    writes sweep_<key>.csv with the value in the first column."""

    status, experiment, problem = _prepare(config_path, seed, precision)
    if status != EXIT_OK:
        return status
    if key not in SolverConfig.keys():
        logger.error(f"unknown solver key '{key}'")
        return EXIT_CONFIG_INVALID
    values = [parse_value(v) if isinstance(v, str) else v for v in values]
    method, seed = experiment.methods[0], experiment.seeds[0]
    variants = []
    try:
        for value in values:
            variant = dataclasses.replace(experiment, solver=dict(experiment.solver, **{key: value}))
            variants.append((value, variant, variant.solver_config(problem.name, method, seed)))
    except ConfigError as e:
        logger.error(f"invalid sweep value for {key}: {e}")
        return EXIT_CONFIG_INVALID

    base_dir = experiment.output_dir
    if base_dir is None:
        try:
            config_hash = utils.save_config_in_table(dict(experiment.as_dict(), sweep={"key": key, "values": values}))
        except OSError as e:
            logger.error(f"cannot write the configuration table: {e}")
            return EXIT_OUTPUT
        base_dir = utils.get_run_dir(f"{problem.name}_{method}_sweep_{key}_{config_hash}")
    status = _prepare_dir(base_dir)
    if status != EXIT_OK:
        return status

    rows = []
    for value, variant, cfg in variants:
        run_dir = os.path.join(base_dir, f"{key}={json.dumps(value)}")
        _, _, row, _ = _run_job((variant, method, seed, run_dir))
        rows.append([json.dumps(value)] + row.as_row())
    utils.save_table(os.path.join(base_dir, f"sweep_{key}.csv"), [key] + METRIC_COLUMNS, rows)
    txt_logger = utils.get_txt_logger(base_dir)
    for row in rows:
        txt_logger.info("{} = {} | e2_y {:.3e} | e2_u {:.3e} | J {:.4e}".format(key, row[0], row[2], row[4], row[6]))
    return EXIT_OK


def run_verify(problem_name, grid_n=1000, seed=0, published=False):
    """Consistency check of a benchmark's optimality system."""
    try:
        problem = make_problem(problem_name)
        report = verify_manufactured(problem, grid_n, seed, published=published)
    except ProblemError as e:
        logger.error(str(e))
        return EXIT_CONFIG_INVALID
    logger.info("{} | state {:.3e} | adjoint {:.3e} | gap {:.3e} | tol {:.0e} | {}".format(
        problem.name, report.max_state_residual, report.max_adjoint_residual, report.max_optimality_gap,
        report.tolerance, "passed" if report.passed else "FAILED"))
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED
