"""Symmetric doubly stochastic mixing weights built from graphs."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import InvalidStepError, ParameterError
from .graphs import laplacian

RULES = ("laplacian", "metropolis")


@dataclass(frozen=True, eq=False)
class MixingWeight:
    """``W`` plus ``eta``, its smallest positive entry."""

    W: np.ndarray
    eta: float


def _check_rule(rule):
    if rule not in RULES:
        raise ParameterError(f"unknown weight rule {rule!r}; choose from {RULES}")


def default_step(g):
    """``1 / (2 max degree)``, or ``None`` for an edgeless graph."""
    dmax = int(g.degrees().max())
    return None if dmax == 0 else 1.0 / (2.0 * dmax)


def weight_from_graph(g, rule="laplacian", h=None):
    """Mixing weight for one graph (memoized; ``W`` is read-only).

    ``laplacian``: ``W = I - h L`` with ``h`` defaulting to
    ``1 / (2 max degree)``, recomputed for every graph.
    ``metropolis``: ``W_ij = 1 / (1 + max(d_i, d_j))`` on edges.
    """
    return _weight(g, rule, None if h is None else float(h))


@lru_cache(maxsize=1024)
def _weight(g, rule, h):
    _check_rule(rule)
    n = g.n
    if rule == "laplacian":
        dmax = int(g.degrees().max())
        if h is None:
            if dmax == 0:
                W = np.eye(n)
                W.setflags(write=False)
                return MixingWeight(W, 1.0)
            h = 1.0 / (2.0 * dmax)
        elif not (h > 0 and (dmax == 0 or h < 1.0 / dmax)):
            raise InvalidStepError(f"h={h} outside (0, 1/{dmax})")
        W = np.eye(n) - h * laplacian(g)
    else:
        d = g.degrees()
        W = np.zeros((n, n))
        for i, j in g.edges:
            W[i, j] = W[j, i] = 1.0 / (1.0 + max(d[i], d[j]))
        W[np.diag_indices(n)] = 1.0 - W.sum(axis=1)
    W.setflags(write=False)
    return MixingWeight(W, float(W[W > 0].min()))


def mean_weight(proc, rule="laplacian", h=None):
    """Exact ``E[W(t)]`` for an i.i.d. process, by enumerating its support."""
    return sum(prob * weight_from_graph(g, rule, h).W for prob, g in proc.support())


def is_doubly_stochastic(W, atol=1e-12):
    W = np.asarray(W)
    ones = np.ones(W.shape[0])
    return (
        np.all(W >= -atol)
        and np.max(np.abs(W @ ones - 1.0)) <= atol
        and np.max(np.abs(ones @ W - 1.0)) <= atol
    )
