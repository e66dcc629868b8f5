"""Undirected graphs and the random graph processes that drive the solvers.

Nodes are ``0 .. n-1`` in memory; the text format is 1-based.
"""

import itertools
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DimensionError, ParameterError, ParseError, UnsupportedProcessError
from .linalg import spectral_radius


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("a graph needs at least one node")
        norm = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ParameterError(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ParameterError(f"edge {(i, j)} out of range for n={self.n}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n, edges):
        return cls(n, frozenset(map(tuple, edges)))

    def degrees(self):
        d = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            d[i] += 1
            d[j] += 1
        return d

    def neighbors(self):
        nbrs = [[] for _ in range(self.n)]
        for i, j in sorted(self.edges):
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs

    def __contains__(self, edge):
        i, j = edge
        return (min(i, j), max(i, j)) in self.edges

    def __len__(self):
        return len(self.edges)


def empty_graph(n):
    return Graph(n, frozenset())


def complete_graph(n):
    return Graph(n, frozenset(itertools.combinations(range(n), 2)))


def path_graph(n):
    return Graph(n, frozenset((i, i + 1) for i in range(n - 1)))


def laplacian(g):
    """Graph Laplacian: degrees on the diagonal, -1 on edges."""
    L = np.zeros((g.n, g.n))
    for i, j in g.edges:
        L[i, j] = L[j, i] = -1.0
        L[i, i] += 1.0
        L[j, j] += 1.0
    return L


@lru_cache(maxsize=1024)
def cached_laplacian(g):
    """Read-only :func:`laplacian`, memoized per graph (sample spaces repeat)."""
    L = laplacian(g)
    L.setflags(write=False)
    return L


def connected_components(g):
    """Component label per node, by breadth-first search."""
    nbrs = g.neighbors()
    label = [-1] * g.n
    comp = 0
    for s in range(g.n):
        if label[s] >= 0:
            continue
        label[s] = comp
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if label[v] < 0:
                    label[v] = comp
                    queue.append(v)
        comp += 1
    return label


def is_connected(g):
    return max(connected_components(g)) == 0


def union_graph(graphs):
    graphs = list(graphs)
    if not graphs:
        raise ParameterError("union of an empty list of graphs")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise DimensionError("graphs live on different node counts")
    return Graph(n, frozenset().union(*(g.edges for g in graphs)))


# ------------------------------------------------------------- processes

class GraphProcess:
    """Seeded generator of graphs ``G(0), G(1), ...`` on ``n`` nodes.

    Subclasses implement :meth:`sample_next`. Those with closed-form edge
    marginals implement :meth:`edge_probabilities`; i.i.d. kinds also
    implement :meth:`support`, the ``(probability, graph)`` pairs of one
    step's law.
    """

    kind = None

    def __init__(self, n, seed=None):
        self.n = n
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def sample_next(self):
        raise NotImplementedError

    def edge_probabilities(self):
        raise UnsupportedProcessError(f"no closed-form edge marginals for {self.kind!r}")

    def support(self):
        raise UnsupportedProcessError(f"{self.kind!r} is not an i.i.d. process")

    def clone(self, seed):
        """Fresh copy of the process at its initial state with a new seed."""
        raise NotImplementedError

    def sample_many(self, count):
        return [self.sample_next() for _ in range(count)]


class FixedProcess(GraphProcess):
    kind = "fixed"

    def __init__(self, graph, seed=None):
        super().__init__(graph.n, seed)
        self.graph = graph

    def sample_next(self):
        return self.graph

    def edge_probabilities(self):
        return {e: 1.0 for e in self.graph.edges}

    def support(self):
        return [(1.0, self.graph)]

    def clone(self, seed):
        return FixedProcess(self.graph, seed)


class IIDUniformProcess(GraphProcess):
    """Uniform i.i.d. draws from a finite list of graphs."""

    kind = "iid-uniform"

    def __init__(self, space, seed=None):
        space = list(space)
        if not space:
            raise ParameterError("empty sample space")
        super().__init__(space[0].n, seed)
        if any(g.n != self.n for g in space):
            raise DimensionError("sample-space graphs differ in node count")
        self.space = space

    def sample_next(self):
        return self.space[int(self.rng.integers(len(self.space)))]

    def edge_probabilities(self):
        k = len(self.space)
        counts = {}
        for g in self.space:
            for e in g.edges:
                counts[e] = counts.get(e, 0) + 1
        return {e: c / k for e, c in counts.items()}

    def support(self):
        w = 1.0 / len(self.space)
        return [(w, g) for g in self.space]

    def clone(self, seed):
        return IIDUniformProcess(self.space, seed)


# Enumerating 2^|E| subgraphs beyond this is refused.
MAX_BERNOULLI_EDGES = 16


class IIDBernoulliProcess(GraphProcess):
    """Each base-graph edge kept independently with probability ``q``."""

    kind = "iid-bernoulli"

    def __init__(self, base, q, seed=None):
        if not 0.0 < q <= 1.0:
            raise ParameterError(f"edge probability must lie in (0, 1], got {q}")
        super().__init__(base.n, seed)
        self.base = base
        self.q = float(q)
        self._edges = sorted(base.edges)

    def sample_next(self):
        keep = self.rng.random(len(self._edges)) < self.q
        return Graph(self.n, frozenset(e for e, k in zip(self._edges, keep) if k))

    def edge_probabilities(self):
        return {e: self.q for e in self._edges}

    def support(self):
        b = len(self._edges)
        if b > MAX_BERNOULLI_EDGES:
            raise UnsupportedProcessError(
                f"{b} base edges: enumerating 2^{b} subgraphs is refused"
            )
        out = []
        for mask in itertools.product((False, True), repeat=b):
            k = sum(mask)
            prob = self.q**k * (1.0 - self.q) ** (b - k)
            if prob > 0.0:
                out.append((prob, Graph(self.n, frozenset(e for e, m in zip(self._edges, mask) if m))))
        return out

    def clone(self, seed):
        return IIDBernoulliProcess(self.base, self.q, seed)


def stationary_distribution(T):
    """Left Perron vector of a row-stochastic matrix, normalized to sum 1."""
    vals, vecs = np.linalg.eig(np.asarray(T).T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.abs(np.real(vecs[:, k]))
    return pi / pi.sum()


class MarkovProcess(GraphProcess):
    """Graphs indexed by a finite Markov chain on the sample space.

    ``initial`` is a distribution over states, or ``None`` for the
    stationary distribution.
    """

    kind = "markov"

    def __init__(self, space, transition, initial=None, seed=None):
        space = list(space)
        if not space:
            raise ParameterError("empty sample space")
        super().__init__(space[0].n, seed)
        T = np.asarray(transition, dtype=np.float64)
        k = len(space)
        if T.shape != (k, k):
            raise DimensionError(f"transition matrix must be {k}x{k}")
        if np.any(T < 0) or np.max(np.abs(T.sum(axis=1) - 1.0)) > 1e-12:
            raise ParameterError("transition matrix must be row stochastic")
        self.space = space
        self.transition = T
        self._cum = np.cumsum(T, axis=1)
        self.stationary_start = initial is None
        self.initial = stationary_distribution(T) if initial is None else np.asarray(initial, float)
        if self.initial.shape != (k,) or abs(self.initial.sum() - 1.0) > 1e-12:
            raise ParameterError("initial distribution must be a probability vector")
        self.state = None

    def sample_next(self):
        u = self.rng.random()
        if self.state is None:
            cum = np.cumsum(self.initial)
        else:
            cum = self._cum[self.state]
        self.state = min(int(np.searchsorted(cum, u * cum[-1], side="right")), len(self.space) - 1)
        return self.space[self.state]

    def edge_probabilities(self):
        if not self.stationary_start:
            raise UnsupportedProcessError(
                "edge marginals are time-invariant only for a stationary start"
            )
        probs = {}
        for w, g in zip(self.initial, self.space):
            for e in g.edges:
                probs[e] = probs.get(e, 0.0) + float(w)
        return probs

    def clone(self, seed):
        return MarkovProcess(
            self.space, self.transition, None if self.stationary_start else self.initial, seed
        )


class TemporalProcess(GraphProcess):
    """Graph choice driven by a stable linear system with noise.

    Each step: ``v <- A v + e1`` with standard normal ``e1``, then
    ``p = max(C v + e2, 0)`` with ``e2`` uniform on [0, 2], and graph ``k``
    is drawn with probability proportional to ``p[k]`` (uniformly when
    ``p`` is all zero).
    """

    kind = "temporal"

    def __init__(self, space, A, C, v0=None, seed=None):
        space = list(space)
        if not space:
            raise ParameterError("empty sample space")
        super().__init__(space[0].n, seed)
        A = np.asarray(A, dtype=np.float64)
        C = np.asarray(C, dtype=np.float64)
        d = A.shape[0]
        if A.shape != (d, d) or C.shape != (len(space), d):
            raise DimensionError("A must be d x d and C must be |space| x d")
        if spectral_radius(A) >= 1.0:
            raise ParameterError("A must have spectral radius below 1")
        if np.any(C <= 0):
            raise ParameterError("C must be entrywise positive")
        self.space = space
        self.A = A
        self.C = C
        self.v0 = np.zeros(d) if v0 is None else np.asarray(v0, dtype=np.float64)
        self.v = self.v0.copy()

    def sample_next(self):
        self.v = self.A @ self.v + self.rng.standard_normal(self.v.size)
        p = np.maximum(self.C @ self.v + self.rng.uniform(0.0, 2.0, self.C.shape[0]), 0.0)
        total = p.sum()
        if total > 0:
            k = int(self.rng.choice(len(self.space), p=p / total))
        else:
            k = int(self.rng.integers(len(self.space)))
        return self.space[k]

    def clone(self, seed):
        return TemporalProcess(self.space, self.A, self.C, self.v0, seed)


def persistent_graph(proc, p):
    """Edges whose per-step inclusion probability is at least ``p``."""
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"p must lie in (0, 1], got {p}")
    probs = proc.edge_probabilities()
    # Absorb rounding in sums of sample-space weights.
    return Graph(proc.n, frozenset(e for e, q in probs.items() if q >= p - 1e-12))


# ---------------------------------------------------------- generators

def random_spanning_tree(n, rng):
    """Random labelled tree: each node attaches to a uniformly chosen earlier one."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(k)])
        edges.add((min(a, b), max(a, b)))
    return edges


def random_connected_graph(n, extra_prob=0.3, rng=None):
    """Spanning tree plus each remaining pair with probability ``extra_prob``."""
    rng = np.random.default_rng(rng)
    edges = random_spanning_tree(n, rng)
    for e in itertools.combinations(range(n), 2):
        if e not in edges and rng.random() < extra_prob:
            edges.add(e)
    return Graph(n, frozenset(edges))


def random_sample_space(n, count=30, keep_prob=0.3, base_extra_prob=0.3, rng=None, max_tries=1000):
    """``count`` random subgraphs of a random connected base with connected union.

    Each sample keeps every base edge independently with ``keep_prob``;
    the whole space is redrawn until the union is connected.
    """
    rng = np.random.default_rng(rng)
    base = random_connected_graph(n, base_extra_prob, rng)
    edges = sorted(base.edges)
    for _ in range(max_tries):
        space = []
        for _ in range(count):
            keep = rng.random(len(edges)) < keep_prob
            space.append(Graph(n, frozenset(e for e, k in zip(edges, keep) if k)))
        if is_connected(union_graph(space)):
            return space
    raise ConfigError(f"no connected union after {max_tries} draws; raise keep_prob or count")


def random_transition_matrix(k, rng=None):
    """Entrywise-positive row-stochastic matrix (irreducible and aperiodic)."""
    rng = np.random.default_rng(rng)
    T = rng.uniform(0.05, 1.0, (k, k))
    T /= T.sum(axis=1, keepdims=True)
    # Push rounding into the diagonal so rows sum to 1 to machine precision.
    T[np.diag_indices(k)] += 1.0 - T.sum(axis=1)
    return T


def random_temporal_dynamics(n_graphs, state_dim, radius=0.9, rng=None):
    """``A`` scaled to spectral radius ``radius`` and ``C`` uniform on (0, 1]."""
    rng = np.random.default_rng(rng)
    G = rng.standard_normal((state_dim, state_dim))
    A = radius * G / spectral_radius(G)
    C = 1.0 - rng.random((n_graphs, state_dim))
    return A, C


# ------------------------------------------------------------------ I/O

def graph_text(g):
    lines = [f"{g.n} {len(g.edges)}"]
    lines += [f"{i + 1} {j + 1}" for i, j in sorted(g.edges)]
    return lines


def save_graphs(path, graphs):
    """Write one or more graphs as consecutive ``n e`` blocks."""
    if isinstance(graphs, Graph):
        graphs = [graphs]
    out = []
    for g in graphs:
        out += graph_text(g)
    Path(path).write_text("\n".join(out) + "\n")


def load_graphs(path):
    """Read every graph block in the file, in order."""
    with open(path) as fh:
        lines = [(k, ln.strip()) for k, ln in enumerate(fh, 1)]
    lines = [(k, ln) for k, ln in lines if ln and not ln.startswith("#")]
    graphs = []
    pos = 0
    while pos < len(lines):
        lineno, head = lines[pos]
        try:
            n, e = (int(t) for t in head.split())
        except ValueError:
            raise ParseError(f"bad graph header {head!r}", lineno, path) from None
        if pos + e > len(lines) - 1:
            raise ParseError(f"graph declares {e} edges but the file ends early", lineno, path)
        edges = []
        for k in range(1, e + 1):
            lineno, ln = lines[pos + k]
            try:
                i, j = (int(t) for t in ln.split())
            except ValueError:
                raise ParseError(f"bad edge {ln!r}", lineno, path) from None
            if not (1 <= i <= n and 1 <= j <= n) or i == j:
                raise ParseError(f"edge {ln!r} invalid for n={n}", lineno, path)
            edges.append((i - 1, j - 1))
        graphs.append(Graph.from_edges(n, edges))
        pos += e + 1
    if not graphs:
        raise ParseError("no graphs found", None, path)
    return graphs
