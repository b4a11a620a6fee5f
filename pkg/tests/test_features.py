import math

import numpy as np
import pytest

from wikipaths.core.exceptions import DimensionMismatchError, MissingEdgeError, UnknownFeatureConfigError
from wikipaths.models.trajectory import Trajectory
from wikipaths.services.features import (
    FEATURE_CONFIGS,
    FeatureScaling,
    FeatureSet,
    assemble_edge_features,
    build_feature_set,
    config_for_columns,
    dht,
    dhnode_in_out_degree,
    dual_node_degrees,
    node_degree_features,
    nof_counts,
    similarity_hyperedge,
    standardize,
    tfidf_edge_similarity,
    training_rows,
)
from wikipaths.services.graph_builder import incidence


def _sparse_equal(a, b):
    return a.shape == b.shape and (a != b).nnz == 0


def test_node_degrees_single_edge(graph_factory):
    graph = graph_factory(2, [(0, 1)])
    assert node_degree_features(graph).matrix.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_node_degrees_star_and_isolated(graph_factory):
    graph = graph_factory(6, [(0, 1), (0, 2), (0, 3), (0, 4)])
    matrix = node_degree_features(graph).matrix
    assert matrix[0].tolist() == [0.0, 4.0]
    assert all(matrix[i].tolist() == [1.0, 0.0] for i in range(1, 5))
    assert matrix[5].tolist() == [0.0, 0.0]


def test_nof_counts(graph_factory):
    graph = graph_factory(4, [(0, 1), (1, 2), (1, 3), (2, 3)])
    paths = [
        Trajectory(path_id=0, node_ids=(0, 1, 2), prefix_len=1),
        Trajectory(path_id=1, node_ids=(0, 1, 3), prefix_len=1),
    ]
    assert nof_counts(graph, paths).tolist() == [2, 1, 1, 0]


def test_nof_conservation(mini_dataset):
    graph, trajectories = mini_dataset
    assert nof_counts(graph, trajectories).sum() == sum(t.length - 1 for t in trajectories)


def test_nof_rejects_missing_edge(chain_graph):
    with pytest.raises(MissingEdgeError):
        nof_counts(chain_graph, [Trajectory(path_id=0, node_ids=(2, 1), prefix_len=1)])


def test_dht_shapes_on_path(chain_graph):
    features = np.arange(6, dtype=np.float64).reshape(3, 2)
    edge_features = np.array([[0.5], [0.25]])
    dual = dht(features, incidence(chain_graph).entries, edge_features)
    assert dual.node_features.shape == (2, 1)
    assert dual.incidence.shape == (2, 3)
    assert dual.hyperedge_features is features


def test_dht_rejects_mismatched_rows(chain_graph):
    with pytest.raises(DimensionMismatchError):
        dht(np.zeros((2, 2)), incidence(chain_graph).entries, np.zeros((2, 1)))


def test_dht_is_an_involution(random_graph_factory):
    """Applying the transform twice restores F, M and E exactly on 200 random graphs."""
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(2, 51))
        graph = random_graph_factory(rng, n, float(rng.uniform(0.02, 0.3)))
        node_features = rng.normal(size=(n, 2))
        edge_features = rng.normal(size=(graph.m, 5))
        mode = "directed" if rng.random() < 0.5 else "undirected"
        matrix = incidence(graph, mode).entries

        dual = dht(node_features, matrix, edge_features)
        assert np.array_equal(dual.node_features, edge_features)
        back = dht(*dual.as_triple())
        assert np.array_equal(back.node_features, node_features)
        assert _sparse_equal(back.incidence, matrix)
        assert np.array_equal(back.hyperedge_features, edge_features)


def test_similarity_hyperedge_path(chain_graph):
    values = similarity_hyperedge(chain_graph)
    assert values[0] == pytest.approx(1 / math.sqrt(2))
    assert values[1] == pytest.approx(1 / math.sqrt(2))


def test_similarity_hyperedge_single_edge(graph_factory):
    assert similarity_hyperedge(graph_factory(2, [(0, 1)])).tolist() == [1.0]


def test_dhnode_path(chain_graph):
    assert dhnode_in_out_degree(chain_graph).tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_dhnode_single_edge_is_zero(graph_factory):
    assert dhnode_in_out_degree(graph_factory(2, [(0, 1)])).tolist() == [[0.0, 0.0]]


def _similarity_oracle(graph):
    degree = [len(graph.in_adjacency[i]) + len(graph.out_adjacency[i]) for i in range(graph.n)]
    values = []
    for edge in graph.edges:
        shared = sum(1 for other in graph.edges if {other.src, other.dst} == {edge.src, edge.dst})
        values.append(shared / (math.sqrt(degree[edge.src]) * math.sqrt(degree[edge.dst])))
    return values


def _dhnode_oracle(graph):
    dual_in = [0] * graph.m
    dual_out = [0] * graph.m
    for node in range(graph.n):
        for e_in in graph.in_adjacency[node]:
            for e_out in graph.out_adjacency[node]:
                dual_out[e_in] += 1
                dual_in[e_out] += 1
    d_max = max(dual_in + dual_out, default=0)
    if d_max == 0:
        return [[0.0, 0.0] for _ in range(graph.m)], dual_in, dual_out
    return [[dual_in[e] / d_max, dual_out[e] / d_max] for e in range(graph.m)], dual_in, dual_out


def test_dual_features_match_enumeration(random_graph_factory):
    """Both dual-hypergraph features equal a direct enumeration on 100 random graphs."""
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 26))
        graph = random_graph_factory(rng, n, float(rng.uniform(0.05, 0.4)))
        if graph.m == 0:
            continue
        similarity = similarity_hyperedge(graph)
        assert similarity.tolist() == _similarity_oracle(graph)
        assert ((similarity >= 0.0) & (similarity <= 1.0)).all()

        expected, dual_in, dual_out = _dhnode_oracle(graph)
        degrees = dhnode_in_out_degree(graph)
        assert degrees.tolist() == expected
        assert dual_node_degrees(graph)[0].tolist() == dual_in
        assert dual_node_degrees(graph)[1].tolist() == dual_out
        if max(dual_in + dual_out) > 0:
            assert degrees.max() == 1.0


@pytest.mark.parametrize("config, width", [("original", 2), ("sim", 3), ("dhnode", 4), ("both", 5)])
def test_feature_set_widths(mini_dataset, mini_documents, config, width):
    graph, trajectories = mini_dataset
    features = build_feature_set(graph, mini_documents, trajectories, config)
    assert features.edge.width == width
    assert features.node.width == 2
    assert features.edge.matrix.shape == (graph.m, width)
    assert config_for_columns(features.edge.columns) == config


def test_unknown_feature_config(mini_dataset):
    graph, trajectories = mini_dataset
    with pytest.raises(UnknownFeatureConfigError):
        build_feature_set(graph, {}, trajectories, "everything")


def test_assemble_keeps_fixed_column_order():
    base = np.ones((3, 2))
    extras = {"dh_in": np.zeros(3), "dh_out": np.full(3, 2.0), "sim_hyperedge": np.full(3, 0.5)}
    matrix = assemble_edge_features(base, extras, ("dh_out", "sim_hyperedge", "dh_in"))
    assert matrix.columns == ("tfidf", "nof", "sim_hyperedge", "dh_in", "dh_out")
    assert matrix.column("dh_out").tolist() == [2.0, 2.0, 2.0]


def test_tfidf_edge_similarity_uses_bodies(mini_dataset, mini_documents):
    graph, _ = mini_dataset
    values = tfidf_edge_similarity(graph, mini_documents)
    assert values.shape == (graph.m,)
    assert ((values >= 0.0) & (values <= 1.0)).all()
    assert tfidf_edge_similarity(graph, {}).tolist() == [0.0] * graph.m


def test_feature_set_save_load_exact(tmp_path, mini_dataset, mini_documents):
    graph, trajectories = mini_dataset
    features = build_feature_set(graph, mini_documents, trajectories, "both")
    features.save(tmp_path)
    loaded = FeatureSet.load(tmp_path)
    assert np.array_equal(loaded.node.matrix, features.node.matrix)
    assert np.array_equal(loaded.edge.matrix, features.edge.matrix)
    assert loaded.edge.columns == features.edge.columns


def test_feature_save_is_deterministic(tmp_path, mini_dataset, mini_documents):
    graph, trajectories = mini_dataset
    build_feature_set(graph, mini_documents, trajectories, "sim").save(tmp_path / "a")
    build_feature_set(graph, mini_documents, trajectories, "sim").save(tmp_path / "b")
    for name in ("node_features.tsv", "edge_features.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_standardize_columns():
    matrix = np.array([[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]])
    scaled = standardize(matrix)
    assert scaled[:, 0].mean() == pytest.approx(0.0)
    assert scaled[:, 0].std() == pytest.approx(1.0)
    assert scaled[:, 1].tolist() == [0.0, 0.0, 0.0]


def test_standardize_against_reference_rows():
    matrix = np.array([[1.0], [3.0], [11.0]])
    scaled = standardize(matrix, np.array([0, 1]))
    assert scaled[:, 0].tolist() == [-1.0, 1.0, 9.0]
    assert standardize(matrix, np.array([], dtype=np.int64)).tolist() == standardize(matrix).tolist()


def test_training_rows_cover_followed_edges(mini_dataset):
    graph, trajectories = mini_dataset
    nodes, edges = training_rows(graph, trajectories[:1])
    assert nodes.tolist() == sorted(trajectories[0].node_ids)
    assert edges.tolist() == sorted(graph.edge_id(s, d) for s, d in trajectories[0].steps())


def test_scaling_refuses_other_widths(mini_dataset, mini_documents):
    graph, trajectories = mini_dataset
    scaling = FeatureScaling.fit(build_feature_set(graph, mini_documents, trajectories, "original"), graph, trajectories)
    with pytest.raises(DimensionMismatchError):
        scaling.apply(build_feature_set(graph, mini_documents, trajectories, "both"))


def test_every_config_listed():
    assert list(FEATURE_CONFIGS) == ["original", "sim", "dhnode", "both"]
