import pytest
from pydantic import ValidationError

from wikipaths.core.exceptions import (
    DensityDomainError,
    DuplicateTitleError,
    InvalidEdgeError,
    MissingEdgeError,
    UnknownTitleError,
)
from wikipaths.models.trajectory import Trajectory, default_prefix_len
from wikipaths.services.graph_builder import (
    build_graph,
    density,
    graph_from_title_paths,
    incidence,
    validate_trajectories,
)


def test_minimal_graph():
    """Two nodes and one edge."""
    graph = build_graph([("A", "B")], ["A", "B"])
    assert (graph.n, graph.m) == (2, 1)
    assert graph.edge_id(0, 1) == 0
    assert graph.edge_id(1, 0) is None


def test_build_graph_keeps_title_order():
    graph = build_graph([("Zeta", "Alpha")], ["Zeta", "Alpha"])
    assert graph.titles == ("Zeta", "Alpha")
    assert graph.edge_id(0, 1) == 0


def test_isolated_node():
    graph = build_graph([], ["A"])
    assert (graph.n, graph.m) == (1, 0)
    assert graph.out_adjacency == ((),)


def test_duplicate_edges_collapse():
    graph = build_graph([("A", "B"), ("B", "C"), ("A", "B")], ["A", "B", "C"])
    assert graph.m == 2
    assert graph.edge_pairs() == ((0, 1), (1, 2))


def test_self_loop_rejected():
    with pytest.raises(InvalidEdgeError):
        build_graph([("A", "A")], ["A"])


def test_unknown_endpoint_rejected():
    with pytest.raises(UnknownTitleError):
        build_graph([("A", "Z")], ["A", "B"])


def test_duplicate_title_rejected():
    with pytest.raises(DuplicateTitleError):
        build_graph([], ["A", "A"])


def test_adjacency_lists_ascending_edge_ids():
    graph = build_graph([("A", "C"), ("B", "C"), ("A", "B")], ["A", "B", "C"])
    assert graph.out_adjacency[0] == (0, 2)
    assert graph.in_adjacency[2] == (0, 1)
    assert list(graph.successors(0)) == [(0, 2), (2, 1)]


def test_directed_incidence_single_edge():
    graph = build_graph([("A", "B")], ["A", "B"])
    matrix = incidence(graph, "directed").toarray()
    assert matrix[:, 0].tolist() == [-1.0, 1.0]


def test_undirected_incidence_single_edge():
    graph = build_graph([("A", "B")], ["A", "B"])
    assert incidence(graph, "undirected").toarray()[:, 0].tolist() == [1.0, 1.0]


def test_incidence_path_graph(chain_graph):
    matrix = incidence(chain_graph).toarray()
    assert matrix.shape == (3, 2)
    assert matrix[1].tolist() == [1.0, 1.0]
    assert (abs(matrix).sum(axis=0) == 2).all()


@pytest.mark.parametrize(
    "n, m, expected, tolerance",
    [
        (7307, 10612, 1.99e-4, 0.005e-4),
        (912, 1311, 1.58e-3, 0.005e-3),
        (4604, 119882, 5.66e-3, 0.005e-3),
        (2, 2, 1.0, 0.0),
    ],
)
def test_density_reproduces_reported_values(n, m, expected, tolerance):
    assert density(n, m) == pytest.approx(expected, abs=tolerance)


def test_sparse_density_rounds_to_one_digit():
    assert float(f"{density(7307, 10612):.0e}") == 2e-4


def test_density_needs_two_nodes():
    with pytest.raises(DensityDomainError):
        density(1, 0)


def test_graph_from_title_paths_first_appearance_ids(mini_dataset):
    graph, trajectories = mini_dataset
    assert graph.titles == ("Thessaloniki", "Aristotle", "Athens", "Parthenon", "Macedonia")
    assert graph.edge_pairs() == ((0, 1), (1, 2), (2, 3), (1, 4), (3, 4))
    assert [t.node_ids for t in trajectories] == [(0, 1, 2, 3), (0, 1, 4), (1, 2, 3, 4)]
    assert [t.prefix_len for t in trajectories] == [2, 2, 2]


def test_default_prefix_len():
    assert default_prefix_len(7, 4) == 4
    assert default_prefix_len(4, 4) == 3
    assert default_prefix_len(2, 4) == 1


def test_trajectory_rejects_revisit():
    with pytest.raises(ValidationError):
        Trajectory(path_id=0, node_ids=(0, 1, 0), prefix_len=1)


def test_trajectory_rejects_bad_prefix():
    with pytest.raises(ValidationError):
        Trajectory(path_id=0, node_ids=(0, 1), prefix_len=2)


def test_validate_trajectories_missing_edge(chain_graph):
    bad = Trajectory(path_id=4, node_ids=(0, 2), prefix_len=1)
    with pytest.raises(MissingEdgeError):
        validate_trajectories(chain_graph, [bad])
