"""Rate bounds, trajectory metrics, rate fitting and contraction witnesses."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConnectivityError, DomainError, ParameterError, ShapeError, SizeError
from .graphs import is_connected, union_graph
from .linalg import mixed_matrix_norm, spectral_radius
from .mixing import weight_from_graph

MAX_LIFTED_DIM = 4096


@dataclass(frozen=True)
class RateBounds:
    theta1: float
    theta2: float
    dim: int


@dataclass
class TrajectoryRecord:
    """Per-iteration metrics of one run, ``t = 0 .. T``."""

    e1: np.ndarray
    e2: np.ndarray
    max_error: np.ndarray
    seed: int = None
    solver: str = None
    node_errors: np.ndarray = None

    @property
    def T(self):
        return len(self.e1) - 1


# ----------------------------------------------------------- lifted maps

def _check_lifted(problem, max_dim):
    d = problem.n_nodes * problem.dim
    if d > max_dim:
        raise SizeError(f"lifted dimension {d} exceeds cap {max_dim}")
    return d


def lift_weight(W, m):
    """``W kron I_m``."""
    return np.kron(getattr(W, "W", W), np.eye(m))


def projected_weight(problem, W):
    """``P (W kron I_m) P`` assembled blockwise."""
    W = getattr(W, "W", W)
    Ps = problem.projectors
    N, m = problem.n_nodes, problem.dim
    blocks = np.einsum("iab,ij,jbc->iajc", Ps, W, Ps)
    return blocks.reshape(N * m, N * m)


def second_moment_term(problem, W):
    """``(W kron I_m) P (W kron I_m)``: block ``(i, j)`` is ``sum_k W_ik W_kj P_k``."""
    W = getattr(W, "W", W)
    N, m = problem.n_nodes, problem.dim
    blocks = np.einsum("ik,kj,kab->iajb", W, W, problem.projectors)
    return blocks.reshape(N * m, N * m)


def error_step(problem, W, e):
    """Apply ``P (W kron I_m) P`` to a stacked error vector."""
    E = problem.stack(e)
    W = getattr(W, "W", W)
    pe = np.einsum("nij,nj->ni", problem.projectors, E)
    return np.einsum("nij,nj->ni", problem.projectors, W @ pe).reshape(-1)


def _weighted_support(proc, rule, h, mc_draws, seed):
    if mc_draws is None:
        return [(p, weight_from_graph(g, rule, h).W) for p, g in proc.support()]
    sampler = proc.clone(seed)
    w = 1.0 / mc_draws
    return [(w, weight_from_graph(sampler.sample_next(), rule, h).W) for _ in range(mc_draws)]


def rate_bounds_iid(problem, proc, rule="laplacian", h=None, max_dim=MAX_LIFTED_DIM,
                    mc_draws=None, seed=0):
    """Lower and upper mean-square rate bounds over i.i.d. graphs.

    ``theta1 = sr(P (Wbar kron I) P)^2`` and
    ``theta2 = sr(P E[(W kron I) P (W kron I)] P)``, with the expectation
    taken exactly over ``proc.support()``. Passing ``mc_draws`` replaces
    the enumeration with that many Monte Carlo draws (seeded by ``seed``).
    """
    d = _check_lifted(problem, max_dim)
    terms = _weighted_support(proc, rule, h, mc_draws, seed)
    Wbar = sum(p * W for p, W in terms)
    second = sum(p * second_moment_term(problem, W) for p, W in terms)
    P = problem.block_projector
    theta1 = spectral_radius(projected_weight(problem, Wbar)) ** 2
    theta2 = spectral_radius(P @ second @ P)
    return RateBounds(float(theta1), float(theta2), d)


def mean_error_curve(problem, Wbar, e0, T):
    """``||(P (Wbar kron I) P)^t e0||^2`` for ``t = 0 .. T``."""
    out = np.empty(T + 1)
    e = np.asarray(e0, dtype=np.float64).reshape(-1)
    out[0] = e @ e
    for t in range(1, T + 1):
        e = error_step(problem, Wbar, e)
        out[t] = e @ e
    return out


# --------------------------------------------------------------- metrics

def metrics(problem, x, target):
    """``(e1, e2)`` of one state: mean squared distance to ``target`` and
    mean squared distance to the node average."""
    X = problem.stack(x)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    if target.size != problem.dim:
        raise ShapeError(f"target has dim {target.size}, expected {problem.dim}")
    e1 = np.mean(np.sum((X - target) ** 2, axis=1))
    e2 = np.mean(np.sum((X - X.mean(axis=0)) ** 2, axis=1))
    return float(e1), float(e2)


# ----------------------------------------------------------- rate fitting

# Values this far below the series start are treated as round-off floor.
FLOOR_RTOL = 1e-20


def default_window(series):
    """Middle 60% of the iterations before the series hits its round-off floor."""
    y = np.asarray(series, dtype=np.float64)
    below = np.nonzero(~(y > FLOOR_RTOL * np.max(np.abs(y))))[0]
    T = (int(below[0]) if below.size else y.size) - 1
    T = max(T, min(3, y.size - 1))
    return int(np.floor(0.2 * T)), int(np.ceil(0.8 * T))


def _window_slice(series, window):
    y = np.asarray(series, dtype=np.float64)
    if window is None:
        window = default_window(y)
    lo, hi = (int(v) for v in window)
    if lo < 0 or hi >= y.size or hi <= lo + 1:
        raise ParameterError(f"window {window} invalid for {y.size} points")
    seg = y[lo:hi + 1]
    if np.any(~(seg > 0)):
        raise DomainError("series must be strictly positive on the fit window")
    return np.arange(lo, hi + 1, dtype=np.float64), seg


def fit_exponential_rate(series, window=None):
    """Per-iteration geometric factor: ``exp`` of the log-linear LS slope."""
    t, y = _window_slice(series, window)
    slope = np.polyfit(t, np.log(y), 1)[0]
    return float(np.exp(slope))


def fit_power_rate(series, window=None):
    """Slope of ``log(series)`` against ``log(t + 1)``."""
    t, y = _window_slice(series, window)
    return float(np.polyfit(np.log(t + 1.0), np.log(y), 1)[0])


# -------------------------------------------------------- contraction

def contraction_check(problem, graphs, rule="laplacian", h=None, strict=False):
    """Mixed norm of ``P (W_k kron I) P ... P (W_1 kron I) P`` over ``graphs``.

    With ``strict`` the union of ``graphs`` must be connected.
    """
    graphs = list(graphs)
    if strict and (not graphs or not is_connected(union_graph(graphs))):
        raise ConnectivityError("union of the graph sequence is not connected")
    N, m = problem.n_nodes, problem.dim
    Ps = problem.projectors
    phi = problem.block_projector.reshape(N, m, N * m)
    for g in graphs:
        W = weight_from_graph(g, rule, h).W
        phi = np.einsum("iab,ij,jbk->iak", Ps, W, phi)
    return mixed_matrix_norm(phi.reshape(N * m, N * m), m)


def repeated_window(window, n_nodes):
    """A window of graphs repeated ``N (N - 1) / 2`` times."""
    rho = n_nodes * (n_nodes - 1) // 2
    return list(window) * max(rho, 1)
