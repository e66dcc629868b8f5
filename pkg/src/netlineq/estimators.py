"""scikit-learn style front end to the distributed solvers."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import ConfigError
from .graphs import (
    GraphProcess,
    IIDUniformProcess,
    MarkovProcess,
    random_sample_space,
    random_transition_matrix,
)
from .mixing import weight_from_graph
from .problem import classify_solutions, even_sizes, partition_problem
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


class DistributedLinearSolver(RegressorMixin, BaseEstimator):
    """Solve ``X w = y`` with rows split across simulated network nodes.

    Node ``i`` sees only its contiguous block of rows. At each iteration
    a graph is drawn from ``graph`` and nodes exchange estimates with their
    neighbours using ``solver``.

    Parameters
    ----------
    n_nodes : int
        Number of nodes; ignored if ``sizes`` is passed to :meth:`fit`.
    solver : {"projection", "randomized-projection", "gd", "randomized-gd"}
    graph : {"iid-uniform", "markov"} or GraphProcess
        Either a process kind built on a random sample space, or a ready
        process (cloned per fit with ``random_state``).
    space_size, keep_prob : int, float
        Sample-space size and edge keep probability for a generated space.
    weight_rule : {"laplacian", "metropolis"}
    n_iter : int
    h : float, optional
        Consensus step of the gradient solvers, default ``1 / (4 n_nodes)``.
    schedule, delta, step_scale :
        Gradient step ``alpha(t)``; ``step_scale`` defaults to ``h``.
    random_state : int, optional

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Node-average estimate after the last iteration.
    node_coefs_ : ndarray of shape (n_nodes, n_features)
    consensus_error_ : ndarray of shape (n_iter + 1,)
        Mean squared distance of node estimates to their average.
    solution_kind_ : str
    """

    def __init__(self, n_nodes=10, solver="projection", graph="iid-uniform", space_size=30,
                 keep_prob=0.3, weight_rule="laplacian", n_iter=1000, h=None,
                 schedule="power", delta=0.1, step_scale=None, random_state=None):
        self.n_nodes = n_nodes
        self.solver = solver
        self.graph = graph
        self.space_size = space_size
        self.keep_prob = keep_prob
        self.weight_rule = weight_rule
        self.n_iter = n_iter
        self.h = h
        self.schedule = schedule
        self.delta = delta
        self.step_scale = step_scale
        self.random_state = random_state

    def _process(self, n, rng):
        seed = int(rng.integers(2**63))
        if isinstance(self.graph, GraphProcess):
            return self.graph.clone(seed)
        space = random_sample_space(n, self.space_size, self.keep_prob, rng=rng)
        if self.graph == "iid-uniform":
            return IIDUniformProcess(space, seed)
        if self.graph == "markov":
            return MarkovProcess(space, random_transition_matrix(len(space), rng), seed=seed)
        raise ConfigError(f"unknown graph {self.graph!r}")

    def fit(self, X, y, sizes=None):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if sizes is None:
            sizes = even_sizes(X.shape[0], self.n_nodes)
        problem = partition_problem(X, y, sizes)
        N = problem.n_nodes
        rng = np.random.default_rng(self.random_state)
        proc = self._process(N, rng)
        state = initial_state(problem, rng.standard_normal((N, problem.dim)), int(rng.integers(2**63)))
        self.solution_kind_ = classify_solutions(problem).kind

        gradient = self.solver in ("gd", "randomized-gd")
        h = self.h if self.h is not None else 1.0 / (4.0 * N)
        sched = make_schedule(self.schedule, self.delta, self.step_scale or h) if gradient else None
        if gradient and alpha(sched, 0) > h:
            raise ConfigError("alpha(0) exceeds h; lower step_scale")

        cons = np.empty(self.n_iter + 1)
        cons[0] = _consensus(state.x)
        for t in range(1, self.n_iter + 1):
            g = proc.sample_next()
            if self.solver == "projection":
                state = step_projection_consensus(problem, weight_from_graph(g, self.weight_rule), state)
            elif self.solver == "randomized-projection":
                state = step_randomized_projection(problem, weight_from_graph(g, self.weight_rule), state)
            elif self.solver == "gd":
                state = step_gradient_descent(problem, g, h, sched, state)
            else:
                state = step_randomized_gd(problem, g, h, sched, state)
            cons[t] = _consensus(state.x)

        self.node_coefs_ = state.x
        self.coef_ = state.x.mean(axis=0)
        self.consensus_error_ = cons
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_


def _consensus(x):
    return float(np.mean(np.sum((x - x.mean(axis=0)) ** 2, axis=1)))
