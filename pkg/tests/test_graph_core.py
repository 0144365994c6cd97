"""Structural graph type and query tests."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from walklab import environments
from walklab.graph_core import (
    Graph,
    GraphError,
    bfs_distances,
    degree,
    dump_adjacency,
    eccentricity_max,
    from_undirected_edges,
    is_connected,
)

ALL_GENERATED = [
    ("star", {"n": 5}),
    ("path", {"n": 6}),
    ("circle", {"n": 6}),
    ("clique", {"n": 5}),
    ("barbell", {"n": 4}),
    ("btree", {"b": 2, "H": 3}),
    ("grid1d", {"n": 6}),
    ("grid2d", {"n1": 4, "n2": 3}),
    ("grid3d", {"n1": 3, "n2": 2, "n3": 2}),
    ("multiroom", {"rooms": 2}),
    ("toy_maze", {}),
    ("hanoi", {"discs": 3}),
]


def make(kind, **params):
    g, _ = environments.make(kind, **params)
    return g


class TestDegree:
    def test_star_center(self):
        assert degree(make("star", n=5), 0) == 5

    def test_path_endpoint(self):
        assert degree(make("path", n=10), 0) == 1

    def test_clique_any_node(self):
        g = make("clique", n=10)
        assert all(degree(g, i) == 9 for i in range(g.m))


class TestConnectivity:
    def test_path_connected(self):
        assert is_connected(make("path", n=3))

    def test_two_disjoint_edges(self):
        g = Graph(4, [[1], [0], [3], [2]])
        assert not is_connected(g)

    def test_barbell_connected(self):
        g = make("barbell", n=4)
        assert is_connected(g)
        assert oracles.oracle_strongly_connected(g)

    def test_one_way_reachability_is_not_enough(self):
        # 0 reaches everything, nothing reaches 0
        g = Graph(3, [[1, 2], [2], [1]])
        assert not is_connected(g)


class TestEccentricity:
    @pytest.mark.parametrize("n", [2, 5, 9])
    def test_path_diameter(self, n):
        assert eccentricity_max(make("path", n=n)) == n

    def test_clique_diameter(self):
        assert eccentricity_max(make("clique", n=7)) == 1

    def test_btree_diameter(self):
        g = make("btree", b=2, H=3)
        assert eccentricity_max(g) == 6
        assert oracles.oracle_diameter(g) == 6

    def test_disconnected_raises(self):
        g = Graph(4, [[1], [0], [3], [2]])
        with pytest.raises(GraphError):
            eccentricity_max(g)

    def test_matches_oracle_on_random_graphs(self):
        rng = random.Random(2024)
        for _ in range(25):
            g = oracles.random_connected_graph(rng)
            assert eccentricity_max(g) == oracles.oracle_diameter(g)


def test_bfs_distances_match_oracle():
    rng = random.Random(7)
    for _ in range(20):
        g = oracles.random_connected_graph(rng)
        src = rng.randrange(g.m)
        want = oracles.oracle_distances(g, src)
        got = bfs_distances(g, src)
        assert got == [want[i] for i in range(g.m)]


@pytest.mark.parametrize("kind,params", ALL_GENERATED)
def test_generator_outputs_are_valid(kind, params):
    """Every generator output: dense positional action ids, connectivity,
    and arc symmetry (all shipped generators are undirected)."""
    g = make(kind, **params)
    assert is_connected(g)
    arcs = {(i, j) for i, row in enumerate(g.out) for j in row}
    for i, row in enumerate(g.out):
        assert len(row) == degree(g, i) >= 1
        assert all(0 <= j < g.m for j in row)
    assert all((j, i) in arcs for (i, j) in arcs)


def test_graph_is_immutable():
    g = make("path", n=3)
    with pytest.raises(AttributeError):
        g.m = 5
    with pytest.raises(TypeError):
        g.out[0][0] = 2  # rows are tuples


def test_construction_validation():
    with pytest.raises(GraphError):
        Graph(0, [])
    with pytest.raises(GraphError):
        Graph(2, [[1], []])  # dead end
    with pytest.raises(GraphError):
        Graph(2, [[1], [5]])  # successor out of range
    with pytest.raises(GraphError):
        Graph(1, [[0]], labels=[("up", "up")])  # wrong label arity


def test_duplicate_labels_rejected():
    with pytest.raises(GraphError):
        Graph(2, [[1, 1], [0]], labels=[("up", "up"), ("down",)])


def test_from_undirected_edges_validation():
    with pytest.raises(GraphError):
        from_undirected_edges(2, [(0, 0)])  # self loop
    with pytest.raises(GraphError):
        from_undirected_edges(2, [(0, 2)])  # out of range
    g = from_undirected_edges(3, [(0, 1), (1, 2)])
    assert g.out[1] == (0, 2)  # neighbors sorted ascending


def test_find_action_roundtrip():
    g = make("grid2d", n1=3, n2=3)
    for i in range(g.m):
        for a in range(degree(g, i)):
            label = g.labels[i][a]
            assert g.find_action(i, label) == a
    assert g.find_action(0, "no-such-label") is None


def test_dump_adjacency_format():
    g = make("star", n=3)
    assert dump_adjacency(g) == "4\n0: 1 2 3\n1: 0\n2: 0\n3: 0\n"


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31))
def test_random_graph_builder_always_connected(seed):
    g = oracles.random_connected_graph(random.Random(seed))
    assert is_connected(g)
