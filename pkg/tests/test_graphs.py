import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netlineq.exceptions import (
    DimensionError,
    ParameterError,
    ParseError,
    UnsupportedProcessError,
)
from netlineq.graphs import (
    FixedProcess,
    Graph,
    IIDBernoulliProcess,
    IIDUniformProcess,
    MarkovProcess,
    TemporalProcess,
    complete_graph,
    connected_components,
    empty_graph,
    is_connected,
    laplacian,
    load_graphs,
    path_graph,
    persistent_graph,
    random_connected_graph,
    random_sample_space,
    random_temporal_dynamics,
    random_transition_matrix,
    save_graphs,
    stationary_distribution,
    union_graph,
)


def _union_find_components(n, edges):
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        parent[find(i)] = find(j)
    return len({find(a) for a in range(n)})


@st.composite
def graphs(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, frozenset(p for p, k in zip(pairs, mask) if k))


class TestGraph:
    def test_normalizes_edges(self):
        g = Graph.from_edges(3, [(2, 0), (1, 2)])
        assert g.edges == {(0, 2), (1, 2)}
        assert (0, 2) in g and (2, 0) in g and (0, 1) not in g

    @pytest.mark.parametrize("edges", [[(0, 0)], [(0, 3)], [(-1, 1)]])
    def test_invalid(self, edges):
        with pytest.raises(ParameterError):
            Graph.from_edges(3, edges)

    def test_hashable(self):
        assert Graph.from_edges(2, [(1, 0)]) == Graph.from_edges(2, [(0, 1)])
        assert len({path_graph(3), path_graph(3)}) == 1


class TestLaplacian:
    def test_path(self):
        np.testing.assert_array_equal(laplacian(path_graph(3)), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])

    def test_empty(self):
        np.testing.assert_array_equal(laplacian(empty_graph(4)), np.zeros((4, 4)))

    def test_complete(self):
        L = laplacian(complete_graph(3))
        np.testing.assert_array_equal(L, 3 * np.eye(3) - np.ones((3, 3)))
        np.testing.assert_allclose(np.linalg.eigvalsh(L), [0.0, 3.0, 3.0], atol=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(graphs())
    def test_properties(self, g):
        L = laplacian(g)
        assert np.array_equal(L, L.T)
        np.testing.assert_allclose(L @ np.ones(g.n), 0.0)
        vals = np.linalg.eigvalsh(L)
        assert vals.min() >= -1e-10
        zero_mult = int(np.sum(np.abs(vals) < 1e-8))
        assert zero_mult == _union_find_components(g.n, g.edges)


class TestConnectivity:
    def test_examples(self):
        assert is_connected(path_graph(3))
        assert not is_connected(empty_graph(2))
        assert is_connected(Graph.from_edges(2, [(0, 1)]))

    def test_union(self):
        u = union_graph([Graph.from_edges(3, [(0, 1)]), Graph.from_edges(3, [(1, 2)])])
        assert u == path_graph(3)
        assert union_graph([path_graph(4), empty_graph(4)]) == path_graph(4)

    def test_union_mismatch(self):
        with pytest.raises(DimensionError):
            union_graph([path_graph(3), path_graph(4)])

    @settings(max_examples=200, deadline=None)
    @given(graphs())
    def test_components_match_union_find(self, g):
        labels = connected_components(g)
        assert len(set(labels)) == _union_find_components(g.n, g.edges)
        for i, j in g.edges:
            assert labels[i] == labels[j]


class TestPersistent:
    def test_fixed(self):
        g = path_graph(4)
        assert persistent_graph(FixedProcess(g), 1.0) == g
        assert persistent_graph(FixedProcess(g), 0.3) == g

    def test_uniform_half(self):
        proc = IIDUniformProcess([complete_graph(4), empty_graph(4)])
        assert persistent_graph(proc, 0.5) == complete_graph(4)
        assert persistent_graph(proc, 0.51) == empty_graph(4)

    def test_bernoulli_is_base(self):
        base = random_connected_graph(6, rng=0)
        assert persistent_graph(IIDBernoulliProcess(base, 0.4), 0.4) == base
        assert persistent_graph(IIDBernoulliProcess(base, 0.4), 0.1) == base

    def test_monotone_in_p(self):
        space = random_sample_space(6, count=10, rng=3)
        proc = IIDUniformProcess(space)
        ps = np.linspace(0.05, 1.0, 20)
        edge_sets = [persistent_graph(proc, p).edges for p in ps]
        for a, b in zip(edge_sets, edge_sets[1:]):
            assert b <= a

    def test_markov_stationary_marginals(self):
        space = [complete_graph(3), empty_graph(3)]
        T = np.array([[0.9, 0.1], [0.3, 0.7]])
        pi = stationary_distribution(T)
        np.testing.assert_allclose(pi, [0.75, 0.25])
        proc = MarkovProcess(space, T)
        assert persistent_graph(proc, 0.75) == complete_graph(3)
        assert persistent_graph(proc, 0.8) == empty_graph(3)

    def test_unsupported(self):
        space = [complete_graph(3), empty_graph(3)]
        with pytest.raises(UnsupportedProcessError):
            persistent_graph(MarkovProcess(space, np.eye(2), initial=[1.0, 0.0]), 0.5)
        A, C = random_temporal_dynamics(2, 3, rng=0)
        with pytest.raises(UnsupportedProcessError):
            persistent_graph(TemporalProcess(space, A, C, seed=0), 0.5)

    def test_bad_p(self):
        with pytest.raises(ParameterError):
            persistent_graph(FixedProcess(path_graph(2)), 0.0)


class TestProcesses:
    def test_fixed(self):
        proc = FixedProcess(complete_graph(3))
        assert all(g == complete_graph(3) for g in proc.sample_many(5))

    def test_absorbing_markov(self):
        space = [path_graph(3), complete_graph(3), empty_graph(3)]
        proc = MarkovProcess(space, np.eye(3), initial=[0.0, 1.0, 0.0], seed=1)
        assert all(g == complete_graph(3) for g in proc.sample_many(50))

    def test_uniform_frequencies(self):
        space = random_sample_space(5, count=30, rng=11)
        # distinct objects so that repeated graphs are still counted separately
        index = {id(g): k for k, g in enumerate(space)}
        proc = IIDUniformProcess(space, seed=2)
        draws = 100_000
        counts = np.zeros(30)
        for _ in range(draws):
            counts[index[id(proc.sample_next())]] += 1
        sigma = np.sqrt(draws * (1 / 30) * (29 / 30))
        assert np.all(np.abs(counts - draws / 30) <= 3.5 * sigma)

    def test_bernoulli_support_sums_to_one(self):
        proc = IIDBernoulliProcess(path_graph(4), 0.3)
        sup = proc.support()
        assert len(sup) == 8
        assert sum(p for p, _ in sup) == pytest.approx(1.0)

    def test_bernoulli_support_refused(self):
        with pytest.raises(UnsupportedProcessError):
            IIDBernoulliProcess(complete_graph(7), 0.5).support()

    def test_markov_support_refused(self):
        proc = MarkovProcess([path_graph(2)], [[1.0]])
        with pytest.raises(UnsupportedProcessError):
            proc.support()

    @pytest.mark.parametrize("kind", ["uniform", "bernoulli", "markov", "temporal"])
    def test_clone_determinism(self, kind):
        space = random_sample_space(5, count=6, rng=4)
        if kind == "uniform":
            proc = IIDUniformProcess(space, seed=9)
        elif kind == "bernoulli":
            proc = IIDBernoulliProcess(union_graph(space), 0.5, seed=9)
        elif kind == "markov":
            proc = MarkovProcess(space, random_transition_matrix(6, rng=1), seed=9)
        else:
            A, C = random_temporal_dynamics(6, 4, rng=1)
            proc = TemporalProcess(space, A, C, seed=9)
        a = proc.clone(21).sample_many(40)
        b = proc.clone(21).sample_many(40)
        c = proc.clone(22).sample_many(40)
        assert a == b
        assert a != c

    def test_markov_validation(self):
        space = [path_graph(2), empty_graph(2)]
        with pytest.raises(ParameterError):
            MarkovProcess(space, [[0.5, 0.6], [0.5, 0.5]])
        with pytest.raises(DimensionError):
            MarkovProcess(space, np.eye(3))

    def test_temporal_validation(self):
        space = [path_graph(2), empty_graph(2)]
        with pytest.raises(ParameterError):
            TemporalProcess(space, 1.1 * np.eye(2), np.ones((2, 2)))
        with pytest.raises(ParameterError):
            TemporalProcess(space, 0.5 * np.eye(2), np.zeros((2, 2)))
        with pytest.raises(DimensionError):
            TemporalProcess(space, 0.5 * np.eye(2), np.ones((3, 2)))

    def test_temporal_dynamics_preset(self):
        A, C = random_temporal_dynamics(30, 100, rng=0)
        assert np.max(np.abs(np.linalg.eigvals(A))) == pytest.approx(0.9)
        assert C.shape == (30, 100) and np.all(C > 0) and np.all(C <= 1)

    def test_transition_matrix(self):
        T = random_transition_matrix(30, rng=0)
        assert np.all(T > 0)
        np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-12)


class TestSampleSpace:
    def test_connected_union_of_sparse_graphs(self):
        space = random_sample_space(20, count=30, rng=1)
        assert len(space) == 30
        assert is_connected(union_graph(space))
        disconnected = sum(not is_connected(g) for g in space)
        assert disconnected > 15

    def test_sparse_setting_at_large_scale(self):
        space = random_sample_space(100, count=30, keep_prob=0.03, rng=1)
        assert is_connected(union_graph(space))
        assert sum(not is_connected(g) for g in space) > 15


class TestGraphIO:
    def test_round_trip(self, tmp_path):
        space = random_sample_space(7, count=4, rng=2)
        save_graphs(tmp_path / "g.txt", space)
        assert load_graphs(tmp_path / "g.txt") == space

    def test_one_based_format(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("3 2\n1 2\n2 3\n")
        assert load_graphs(f) == [path_graph(3)]

    @pytest.mark.parametrize("text", ["3 2\n1 2\n", "3 1\n1 4\n", "3 1\n2 2\n", "x y\n", ""])
    def test_malformed(self, tmp_path, text):
        f = tmp_path / "g.txt"
        f.write_text(text)
        with pytest.raises(ParseError):
            load_graphs(f)
