"""Distributed solvers for network linear equations over random graphs."""

from .analysis import (
    RateBounds,
    TrajectoryRecord,
    contraction_check,
    fit_exponential_rate,
    fit_power_rate,
    metrics,
    rate_bounds_iid,
)
from .estimators import DistributedLinearSolver
from .graphs import (
    FixedProcess,
    Graph,
    GraphProcess,
    IIDBernoulliProcess,
    IIDUniformProcess,
    MarkovProcess,
    TemporalProcess,
    is_connected,
    laplacian,
    persistent_graph,
    union_graph,
)
from .harness import AggregateResult, ExperimentConfig, emit_csv, emit_plot_data, run_experiment
from .linalg import (
    affine_projection,
    kernel_projector,
    kronecker,
    mixed_matrix_norm,
    pseudoinverse,
    spectral_radius,
)
from .mixing import MixingWeight, mean_weight, weight_from_graph
from .problem import (
    NetworkProblem,
    SolutionInfo,
    classify_solutions,
    load_libsvm,
    load_problem,
    partition_problem,
    projection_average,
)
from .solvers import (
    SolverState,
    StepSchedule,
    alpha,
    make_schedule,
    step_gradient_descent,
    step_projection_consensus,
    step_randomized_gd,
    step_randomized_projection,
)

__version__ = "0.1.0"
