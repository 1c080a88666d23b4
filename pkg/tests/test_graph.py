import json

import numpy as np
import pytest

from conftest import CANVAS, cycle_graph, path_graph, star_graph, triangle_graph
from treespan.graph import (
    Graph,
    GraphError,
    UnionFind,
    connected_component_count,
    dumps_graph,
    edge_key,
    is_tree,
    keypoints,
)


def test_edge_key_canonical_order():
    assert edge_key(3, 1) == (1, 3)
    assert edge_key(1, 3) == (1, 3)


def test_edge_key_rejects_self_loop():
    with pytest.raises(GraphError):
        edge_key(2, 2)


def test_graph_rejects_duplicate_ids():
    with pytest.raises(GraphError):
        Graph(((0, 1.0, 1.0), (0, 2.0, 2.0)), frozenset(), CANVAS)


def test_graph_rejects_out_of_canvas_node():
    with pytest.raises(GraphError):
        Graph.build([(70.0, 10.0)], [], CANVAS)
    with pytest.raises(GraphError):
        Graph.build([(10.0, -1.0)], [], CANVAS)


def test_graph_rejects_edge_to_missing_node():
    with pytest.raises(GraphError):
        Graph(((0, 1.0, 1.0), (1, 2.0, 2.0)), frozenset({(0, 5)}), CANVAS)


def test_graph_rejects_non_canonical_edge():
    with pytest.raises(GraphError):
        Graph(((0, 1.0, 1.0), (1, 2.0, 2.0)), frozenset({(1, 0)}), CANVAS)


def test_graph_rejects_bad_canvas():
    with pytest.raises(GraphError):
        Graph.build([], [], (0, 64))


def test_build_assigns_sequential_ids():
    g = path_graph(3)
    assert g.node_ids() == [0, 1, 2]
    assert g.node_count == 3


def test_adjacency_and_degrees():
    g = star_graph()
    assert g.adjacency() == {0: [1, 2, 3], 1: [0], 2: [0], 3: [0]}
    assert g.degrees() == {0: 3, 1: 1, 2: 1, 3: 1}


def test_edge_length_and_total():
    g = path_graph(3, spacing=10.0)
    assert g.edge_length((0, 1)) == pytest.approx(10.0)
    assert g.total_edge_length() == pytest.approx(20.0)


def test_json_schema_shape():
    g = triangle_graph()
    data = g.to_json_dict()
    assert set(data) == {"canvas", "nodes", "edges"}
    assert data["canvas"] == [64, 64]
    assert data["edges"] == [[0, 1], [0, 2], [1, 2]]
    assert all(i < j for i, j in data["edges"])
    assert data["nodes"][0] == [0, 10.0, 10.0]


def test_json_roundtrip():
    g = triangle_graph()
    assert Graph.from_json_dict(json.loads(dumps_graph(g))) == g


def test_save_load_roundtrip(tmp_path):
    g = star_graph()
    path = tmp_path / "g.json"
    g.save(path)
    assert Graph.load(path) == g


def test_is_tree_path():
    assert is_tree(path_graph(3))


def test_is_tree_triangle_false():
    assert not is_tree(triangle_graph())


def test_is_tree_forest_false():
    g = Graph.build([(1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0)],
                    [(0, 1), (2, 3)], CANVAS)
    assert not is_tree(g)


def test_is_tree_trivial_graphs():
    assert is_tree(Graph.build([], [], CANVAS))
    assert is_tree(Graph.build([(1.0, 1.0)], [], CANVAS))


def test_keypoints_path_endpoints():
    assert keypoints(path_graph(5)) == {0, 4}


def test_keypoints_star_all_nodes():
    assert keypoints(star_graph()) == {0, 1, 2, 3}


def test_keypoints_single_node():
    g = Graph.build([(1.0, 1.0)], [], CANVAS)
    assert keypoints(g) == {0}


def test_keypoints_cycle_empty():
    assert keypoints(cycle_graph()) == set()


def test_union_find_components():
    uf = UnionFind(range(5))
    assert uf.union(0, 1)
    assert not uf.union(1, 0)
    uf.union(2, 3)
    assert uf.component_count() == 3
    assert uf.find(1) == uf.find(0)


def test_tree_predicate_matches_component_count():
    # |E| = |V| - 1 plus a single component is exactly the tree condition;
    # cross-check the BFS-based predicate against union-find on random graphs.
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(1, 9))
        possible = [(i, j) for i in range(n) for j in range(i + 1, n)]
        take = rng.random(len(possible)) < 0.35
        edges = [e for e, t in zip(possible, take) if t]
        positions = [(float(1 + i), 1.0) for i in range(n)]
        g = Graph.build(positions, edges, CANVAS)
        expected = len(edges) == n - 1 and connected_component_count(g) == 1
        assert is_tree(g) == expected
