"""Seeded Monte Carlo experiments: config files, parallel runs, CSV output.

Config files are flat ``key = value`` text, one entry per line, ``#``
starting a comment. Unknown keys are rejected. See ``FIELDS`` for the
accepted keys and README.md for the grammar.
"""

import concurrent.futures as cf
import dataclasses
import hashlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    RateBounds,
    TrajectoryRecord,
    fit_exponential_rate,
    fit_power_rate,
    metrics,
    rate_bounds_iid,
)
from .exceptions import ConfigError, DomainError, ParameterError, SizeError, UnsupportedProcessError
from .graphs import (
    FixedProcess,
    IIDBernoulliProcess,
    IIDUniformProcess,
    MarkovProcess,
    TemporalProcess,
    load_graphs,
    random_connected_graph,
    random_sample_space,
    random_temporal_dynamics,
    random_transition_matrix,
)
from .mixing import RULES, weight_from_graph
from .problem import (
    UNIQUE_EXACT,
    classify_solutions,
    even_sizes,
    load_libsvm,
    load_problem,
    make_synthetic_problem,
    partition_problem,
    projection_average,
)
from .solvers import (
    SOLVERS,
    alpha,
    initial_state,
    make_schedule,
    step_gradient_descent,
    step_projection_consensus,
    step_randomized_gd,
    step_randomized_projection,
)

logger = logging.getLogger(__name__)

WORKERS_ENV = "NETLINEQ_WORKERS"
GRAPH_KINDS = ("fixed", "iid-uniform", "iid-bernoulli", "markov", "temporal")
CSV_HEADER = ("t", "e1", "e1_stderr", "e2", "e2_stderr")


@dataclass
class ExperimentConfig:
    # problem
    problem: str = "synthetic"          # synthetic | text | libsvm
    problem_file: str = None
    sizes: tuple = None                 # per-node row counts for file problems
    n_nodes: int = 20
    dim: int = 10
    rank: int = None                    # defaults to dim
    rows_min: int = 1
    rows_max: int = 20
    residual: float = 0.0
    # graphs
    graph: str = "iid-uniform"
    graph_file: str = None              # sample space (or the fixed graph)
    space_size: int = 30
    keep_prob: float = 0.3
    edge_prob: float = 0.5              # iid-bernoulli
    temporal_dim: int = 100
    temporal_radius: float = 0.9
    weight_rule: str = "laplacian"
    weight_h: float = None
    # solver
    solver: str = "projection"
    schedule: str = "power"
    delta: float = 0.1
    step_scale: float = 1.0
    h: float = None                     # gd consensus step, default 1/(4N)
    init: str = "gaussian"              # gaussian | local
    init_scale: float = 1.0
    fixed_init: bool = True
    # run
    iterations: int = 2000
    runs: int = 50
    seed: int = 0
    workers: int = None
    bounds: bool = False
    node_errors: bool = False
    csv: str = None
    plot_data: str = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.problem not in ("synthetic", "text", "libsvm"):
            raise ConfigError(f"unknown problem source {self.problem!r}")
        if self.problem != "synthetic" and not self.problem_file:
            raise ConfigError(f"problem = {self.problem} needs problem_file")
        if self.graph not in GRAPH_KINDS:
            raise ConfigError(f"unknown graph process {self.graph!r}")
        if self.graph == "fixed" and not self.graph_file:
            raise ConfigError("graph = fixed needs graph_file")
        if self.weight_rule not in RULES:
            raise ConfigError(f"unknown weight_rule {self.weight_rule!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.init not in ("gaussian", "local"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.rows_min < 1 or self.rows_max < self.rows_min:
            raise ConfigError("need 1 <= rows_min <= rows_max")
        if self.is_gradient:
            try:
                make_schedule(self.schedule, self.delta, self.step_scale)
            except ParameterError as exc:
                raise ConfigError(str(exc)) from None

    @property
    def is_gradient(self):
        return self.solver in ("gd", "randomized-gd")

    @property
    def consensus_step(self):
        if self.h is not None:
            return self.h
        return 1.0 / (4.0 * self.n_nodes)

    # ------------------------------------------------------ text format

    @classmethod
    def from_text(cls, text, source="<config>"):
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or not key:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
            if key not in FIELDS:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            try:
                values[key] = _parse_value(FIELDS[key], val)
            except ValueError as exc:
                raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
        return cls(**values)

    @classmethod
    def from_file(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg = cls.from_text(text, str(path))
        # Relative data paths are resolved against the config's directory.
        base = Path(path).resolve().parent
        for key in ("problem_file", "graph_file"):
            val = getattr(cfg, key)
            if val and not Path(val).is_absolute():
                setattr(cfg, key, str(base / val))
        return cfg

    def to_text(self):
        lines = []
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            lines.append(f"{f.name} = {_format_value(val)}")
        return "\n".join(lines) + "\n"

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _field_types():
    types = {}
    for f in dataclasses.fields(ExperimentConfig):
        if f.name == "sizes":
            types[f.name] = "sizes"
        elif f.default is None:
            types[f.name] = {"rank": int, "workers": int, "weight_h": float, "h": float}.get(f.name, str)
        else:
            types[f.name] = type(f.default)
    return types


def _parse_value(kind, text):
    if text.lower() in ("none", ""):
        return None
    if kind == "sizes":
        return tuple(int(v) for v in text.replace(",", " ").split())
    if kind is bool:
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def _format_value(val):
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, tuple):
        return ",".join(str(v) for v in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


FIELDS = _field_types()


# --------------------------------------------------------------- seeding

_LABELS = ("problem", "space", "dynamics", "graph", "init", "rows")


def derive_seed(master, run, label):
    """Stable 64-bit child seed for ``(master seed, run index, stream label)``."""
    if label not in _LABELS:
        raise ValueError(f"unknown stream label {label!r}")
    digest = hashlib.blake2b(f"{master}/{run}/{label}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


# ----------------------------------------------------------- construction

def build_problem(cfg):
    if cfg.problem == "synthetic":
        rng = np.random.default_rng(derive_seed(cfg.seed, -1, "problem"))
        sizes = cfg.sizes or tuple(
            int(v) for v in rng.integers(cfg.rows_min, cfg.rows_max + 1, size=cfg.n_nodes)
        )
        rank = cfg.dim if cfg.rank is None else cfg.rank
        if sum(sizes) < rank:
            raise ConfigError(f"{sum(sizes)} rows cannot carry rank {rank}")
        problem, _ = make_synthetic_problem(sizes, cfg.dim, rank, cfg.residual, rng)
        return problem
    if cfg.problem == "text":
        H, z = load_problem(cfg.problem_file)
    else:
        H, z = load_libsvm(cfg.problem_file)
    sizes = cfg.sizes or even_sizes(H.shape[0], cfg.n_nodes)
    return partition_problem(H, z, sizes)


def build_process(cfg, n_nodes):
    """Template graph process; each run clones it with its own seed."""
    rng = np.random.default_rng(derive_seed(cfg.seed, -1, "space"))
    if cfg.graph_file:
        space = load_graphs(cfg.graph_file)
        if any(g.n != n_nodes for g in space):
            raise ConfigError(f"graph_file graphs must have {n_nodes} nodes")
    elif cfg.graph in ("iid-uniform", "markov", "temporal"):
        space = random_sample_space(n_nodes, cfg.space_size, cfg.keep_prob, rng=rng)
    else:
        space = [random_connected_graph(n_nodes, rng=rng)]
    dyn = np.random.default_rng(derive_seed(cfg.seed, -1, "dynamics"))
    if cfg.graph == "fixed":
        return FixedProcess(space[0])
    if cfg.graph == "iid-uniform":
        return IIDUniformProcess(space)
    if cfg.graph == "iid-bernoulli":
        return IIDBernoulliProcess(space[0], cfg.edge_prob)
    if cfg.graph == "markov":
        return MarkovProcess(space, random_transition_matrix(len(space), dyn))
    A, C = random_temporal_dynamics(len(space), cfg.temporal_dim, cfg.temporal_radius, dyn)
    return TemporalProcess(space, A, C)


def initial_states(cfg, problem, run):
    label_run = -1 if cfg.fixed_init else run
    rng = np.random.default_rng(derive_seed(cfg.seed, label_run, "init"))
    x0 = cfg.init_scale * rng.standard_normal((problem.n_nodes, problem.dim))
    if cfg.init == "local":
        x0 = np.einsum("nij,nj->ni", problem.projectors, x0) + problem.min_norm_points
    return x0


@dataclass
class Context:
    """Everything shared read-only by the runs of one experiment."""

    cfg: ExperimentConfig
    problem: object
    process: object
    info: object
    target_ls: np.ndarray = None


def build_context(cfg):
    problem = build_problem(cfg)
    info = classify_solutions(problem)
    if cfg.solver == "projection" and not info.has_exact:
        raise ConfigError("projection consensus needs an exactly solvable problem")
    if cfg.solver == "randomized-projection" and info.kind != UNIQUE_EXACT:
        raise ConfigError("randomized projection needs a unique exact solution")
    if cfg.is_gradient and info.x_ls is None:
        raise ConfigError("gradient solvers need rank(H) = m for a unique least-squares target")
    if cfg.is_gradient:
        a0 = alpha(make_schedule(cfg.schedule, cfg.delta, cfg.step_scale), 0)
        if a0 > cfg.consensus_step:
            raise ConfigError(f"alpha(0) = {a0:g} exceeds h = {cfg.consensus_step:g}; lower step_scale")
    process = build_process(cfg, problem.n_nodes)
    return Context(cfg, problem, process, info, info.x_ls)


# ------------------------------------------------------------------ runs

def run_trajectory(ctx, run):
    """One seeded trajectory; returns its :class:`TrajectoryRecord`."""
    cfg, problem = ctx.cfg, ctx.problem
    proc = ctx.process.clone(derive_seed(cfg.seed, run, "graph"))
    x0 = initial_states(cfg, problem, run)
    state = initial_state(problem, x0, derive_seed(cfg.seed, run, "rows"))
    target = ctx.target_ls if cfg.is_gradient else projection_average(problem, x0)
    T = cfg.iterations
    e1 = np.empty(T + 1)
    e2 = np.empty(T + 1)
    emax = np.empty(T + 1)
    node_err = np.empty((T + 1, problem.n_nodes)) if cfg.node_errors else None
    sched = make_schedule(cfg.schedule, cfg.delta, cfg.step_scale) if cfg.is_gradient else None
    h = cfg.consensus_step

    def record(t, x):
        sq = np.sum((x - target) ** 2, axis=1)
        e1[t], e2[t] = metrics(problem, x, target)
        emax[t] = np.sqrt(sq.max())
        if node_err is not None:
            node_err[t] = sq

    record(0, state.x)
    for t in range(1, T + 1):
        g = proc.sample_next()
        if cfg.solver == "projection":
            state = step_projection_consensus(problem, weight_from_graph(g, cfg.weight_rule, cfg.weight_h), state)
        elif cfg.solver == "randomized-projection":
            state = step_randomized_projection(problem, weight_from_graph(g, cfg.weight_rule, cfg.weight_h), state)
        elif cfg.solver == "gd":
            state = step_gradient_descent(problem, g, h, sched, state)
        else:
            state = step_randomized_gd(problem, g, h, sched, state)
        record(t, state.x)
    return TrajectoryRecord(e1, e2, emax, seed=run, solver=cfg.solver, node_errors=node_err)


_WORKER_CTX = None


def _init_worker(cfg):
    global _WORKER_CTX
    _WORKER_CTX = build_context(cfg)


def _run_in_worker(run):
    return run_trajectory(_WORKER_CTX, run)


def worker_count(cfg):
    if cfg.workers is not None:
        return max(1, cfg.workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


@dataclass
class AggregateResult:
    t: np.ndarray
    e1: np.ndarray
    e1_stderr: np.ndarray
    e2: np.ndarray
    e2_stderr: np.ndarray
    rates: dict = field(default_factory=dict)
    bounds: RateBounds = None
    records: list = field(default_factory=list, repr=False)
    info: object = None


def _mean_and_stderr(rows):
    stack = np.vstack(rows)
    total = np.zeros(stack.shape[1])
    for r in stack:  # ordered reduction keeps output bytes independent of scheduling
        total += r
    mean = total / len(rows)
    if len(rows) < 2:
        return mean, np.zeros_like(mean)
    var = np.zeros_like(mean)
    for r in stack:
        var += (r - mean) ** 2
    return mean, np.sqrt(var / (len(rows) - 1) / len(rows))


def _safe_fit(fn, series):
    try:
        return fn(series)
    except (DomainError, ParameterError):
        return None


def aggregate(records, bounds=None, info=None):
    e1, e1_se = _mean_and_stderr([r.e1 for r in records])
    e2, e2_se = _mean_and_stderr([r.e2 for r in records])
    rates = {
        "e1_exponential": _safe_fit(fit_exponential_rate, e1),
        "e1_power": _safe_fit(fit_power_rate, e1),
    }
    return AggregateResult(np.arange(e1.size), e1, e1_se, e2, e2_se, rates, bounds, list(records), info)


def run_experiment(cfg, workers=None):
    """Run ``cfg.runs`` seeded trajectories and average their metrics.

    Output is a pure function of the config: run ``r`` always uses seeds
    derived from ``(cfg.seed, r)`` and aggregation sums in run order.
    """
    ctx = build_context(cfg)
    n_workers = workers or worker_count(cfg)
    runs = range(cfg.runs)
    if n_workers == 1 or cfg.runs == 1:
        records = [run_trajectory(ctx, r) for r in runs]
    else:
        with cf.ProcessPoolExecutor(n_workers, initializer=_init_worker, initargs=(cfg,)) as pool:
            records = list(pool.map(_run_in_worker, runs))
    bounds = None
    if cfg.bounds and cfg.solver == "projection":
        try:
            bounds = rate_bounds_iid(ctx.problem, ctx.process, cfg.weight_rule, cfg.weight_h)
        except (UnsupportedProcessError, SizeError) as exc:
            logger.info("rate bounds unavailable: %s", exc)
    res = aggregate(records, bounds, ctx.info)
    if cfg.csv:
        emit_csv(res, cfg.csv)
    if cfg.plot_data:
        emit_plot_data(res, cfg.plot_data)
    return res


# --------------------------------------------------------------- output

def _fmt(v):
    return repr(float(v))


def _write_rows(path, header, columns):
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join([str(int(row[0]))] + [_fmt(v) for v in row[1:]]))
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_csv(res, path):
    _write_rows(path, CSV_HEADER, [res.t, res.e1, res.e1_stderr, res.e2, res.e2_stderr])


def emit_plot_data(res, path):
    """CSV columns plus ``r1 = e1(0) theta1^t`` and ``r2`` when bounds exist."""
    header = list(CSV_HEADER)
    cols = [res.t, res.e1, res.e1_stderr, res.e2, res.e2_stderr]
    if res.bounds is not None:
        header += ["r1", "r2"]
        cols += [res.e1[0] * res.bounds.theta1 ** res.t, res.e1[0] * res.bounds.theta2 ** res.t]
    _write_rows(path, header, cols)


def read_csv(path):
    """Columns of a CSV written by :func:`emit_csv` as a dict of arrays."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise ConfigError(f"{path}: {len(header)} header fields but {data.shape[1]} columns")
    return {name: data[:, k] for k, name in enumerate(header)}
