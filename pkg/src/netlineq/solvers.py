"""One-step updates of the four distributed protocols.

States are (N, m) arrays: row ``i`` is node ``i``'s estimate. Each step
returns a new :class:`SolverState`; the input is never modified.

``projection``             project the neighbour average onto ``A_i``
``randomized-projection``  same, onto one row of ``A_i`` sampled by row norm
``gd``                     Laplacian consensus plus a local gradient step
``randomized-gd``          same, with the gradient of one sampled row
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ParameterError, ShapeError, StepOrderError
from .graphs import cached_laplacian

SOLVERS = ("projection", "randomized-projection", "gd", "randomized-gd")


@dataclass(frozen=True, eq=False)
class SolverState:
    """Iteration index, stacked estimates, and the row-sampling stream."""

    t: int
    x: np.ndarray
    rng: np.random.Generator = field(default=None, repr=False)

    @property
    def stacked(self):
        return self.x.reshape(-1)


def initial_state(problem, x0, rng=None):
    x = problem.stack(np.array(x0, dtype=np.float64, copy=True))
    return SolverState(0, x, np.random.default_rng(rng))


# ------------------------------------------------------------ schedules

@dataclass(frozen=True)
class StepSchedule:
    """Gradient step ``alpha(t)``, optionally multiplied by ``scale``.

    ``power``:    ``scale / (t+1)^(1/2 + delta)``, ``delta`` in (0, 1/2]
    ``harmonic``: ``scale / (t+1)``
    ``constant``: ``scale``
    """

    kind: str
    delta: float = 0.0
    scale: float = 1.0


def make_schedule(kind, delta=None, scale=1.0):
    if scale <= 0:
        raise ParameterError(f"schedule scale must be positive, got {scale}")
    if kind == "power":
        if delta is None or not 0.0 < delta <= 0.5:
            raise ParameterError(f"power schedule needs delta in (0, 0.5], got {delta}")
        return StepSchedule("power", float(delta), float(scale))
    if kind in ("harmonic", "constant"):
        return StepSchedule(kind, 0.0, float(scale))
    raise ParameterError(f"unknown schedule kind {kind!r}")


def alpha(sched, t):
    if sched.kind == "power":
        return sched.scale / (t + 1.0) ** (0.5 + sched.delta)
    if sched.kind == "harmonic":
        return sched.scale / (t + 1.0)
    return sched.scale


# ----------------------------------------------------------------- steps

def _mix(W, x):
    W = getattr(W, "W", W)
    if W.shape != (x.shape[0], x.shape[0]):
        raise ShapeError(f"weight is {W.shape}, state has {x.shape[0]} nodes")
    return W @ x


def step_projection_consensus(problem, W, state):
    """``x_i <- proj_{A_i}(sum_j W_ij x_j)`` for every node."""
    v = _mix(W, state.x)
    x = np.einsum("nij,nj->ni", problem.projectors, v) + problem.min_norm_points
    return replace(state, t=state.t + 1, x=x)


def sample_rows(problem, rng):
    """One local row index per node, drawn with prob. ``|H_i^(s)|^2 / |H_i|_F^2``."""
    u = rng.random(problem.n_nodes)
    rows = np.count_nonzero(problem.row_cdfs <= u[:, None], axis=1)
    # A cdf ending at 1 - eps could let u land past the last row.
    return np.minimum(rows, np.asarray(problem.sizes) - 1)


def _sampled_rows(problem, rows):
    idx = problem.offsets[:-1] + rows
    return problem.H[idx], problem.z[idx]


def step_randomized_projection(problem, W, state, rows=None):
    """Projection onto a single sampled row's hyperplane per node.

    ``rows`` forces the per-node row choice (local 0-based indices); by
    default they are drawn from ``state.rng``.
    """
    if rows is None:
        rows = sample_rows(problem, state.rng)
    a, b = _sampled_rows(problem, rows)
    v = _mix(W, state.x)
    coef = (np.einsum("ij,ij->i", a, v) - b) / np.einsum("ij,ij->i", a, a)
    return replace(state, t=state.t + 1, x=v - coef[:, None] * a)


def _consensus_part(g, h, x):
    if g.n != x.shape[0]:
        raise ShapeError(f"graph has {g.n} nodes, state has {x.shape[0]}")
    return x - h * (cached_laplacian(g) @ x)


def _checked_alpha(sched, t, h):
    a = alpha(sched, t)
    if a > h:
        raise StepOrderError(f"alpha({t}) = {a:g} exceeds h = {h:g}")
    return a


def step_gradient_descent(problem, g, h, sched, state):
    """``x <- (I - h L kron I) x - alpha(t) (H_d x - z_H)``."""
    a = _checked_alpha(sched, state.t, h)
    grad = np.einsum("nij,nj->ni", problem.grams, state.x) - problem.local_rhs
    x = _consensus_part(g, h, state.x) - a * grad
    return replace(state, t=state.t + 1, x=x)


def step_randomized_gd(problem, g, h, sched, state, rows=None):
    """Consensus step plus the gradient of one sampled local row."""
    a = _checked_alpha(sched, state.t, h)
    if rows is None:
        rows = sample_rows(problem, state.rng)
    H_s, z_s = _sampled_rows(problem, rows)
    resid = np.einsum("ij,ij->i", H_s, state.x) - z_s
    x = _consensus_part(g, h, state.x) - a * resid[:, None] * H_s
    return replace(state, t=state.t + 1, x=x)
