import json

import numpy as np
import pytest
import torch

from wikipaths.config import ModelConfig, TrainConfig
from wikipaths.core.exceptions import EmptyTrainingSetError, SchemaMismatchError, SplitOverlapError
from wikipaths.models.graph import ArticleNode, DirectedEdge, NavGraph
from wikipaths.models.trajectory import Trajectory, to_queries
from wikipaths.services.features import FeatureScaling, build_feature_set
from wikipaths.services.gretel import GretelModel, loss
from wikipaths.services.metrics import precision_top_k, target_probability
from wikipaths.services.trainer import load_checkpoint, save_checkpoint, train

ROUTES = [(0, 1, 2, 3, 4, 5), (6, 7, 8, 9, 10, 11)]


def _two_route_dataset(num_paths=100):
    """Two fixed routes over 20 articles; every route article also links to a dead-end distractor."""
    pairs = []
    for route in ROUTES:
        pairs.extend(zip(route[:-1], route[1:]))
    pairs.extend((i, 12 + i % 8) for i in range(12))
    graph = NavGraph(
        [ArticleNode(id=i, title=f"Article {i:02d}") for i in range(20)],
        [DirectedEdge(id=j, src=s, dst=d) for j, (s, d) in enumerate(pairs)],
    )
    trajectories = [
        Trajectory(path_id=k, node_ids=ROUTES[k % 2], prefix_len=2) for k in range(num_paths)
    ]
    return graph, trajectories


def _params(model):
    return {k: v.clone() for k, v in model.network.state_dict().items()}


def _same_params(a, b):
    return all(torch.equal(a[k], b[k]) for k in a)


@pytest.fixture
def mini_model(mini_dataset, mini_documents):
    graph, trajectories = mini_dataset
    features = build_feature_set(graph, mini_documents, trajectories, "both")
    return GretelModel(graph, features, ModelConfig(hidden_widths=(4,)), seed=5), to_queries(trajectories)


def test_zero_epochs_leaves_parameters(mini_model):
    model, queries = mini_model
    before = _params(model)
    result = train(model, queries, [], TrainConfig(epochs=0))
    assert result.history == []
    assert _same_params(before, _params(model))


def test_training_is_deterministic(mini_dataset, mini_documents):
    graph, trajectories = mini_dataset
    features = build_feature_set(graph, mini_documents, trajectories, "both")
    queries = to_queries(trajectories)
    runs = []
    for _ in range(2):
        model = GretelModel(graph, features, ModelConfig(hidden_widths=(4,)), seed=9)
        result = train(model, queries, [], TrainConfig(epochs=15, learning_rate=0.1))
        runs.append((_params(model), [r.train_loss for r in result.history]))
    assert _same_params(runs[0][0], runs[1][0])
    assert runs[0][1] == runs[1][1]


def test_small_step_loss_is_monotone():
    graph, trajectories = _two_route_dataset(20)
    features = build_feature_set(graph, {}, trajectories, "original")
    model = GretelModel(graph, features, ModelConfig(hidden_widths=()), seed=0)
    result = train(model, to_queries(trajectories), [], TrainConfig(epochs=30, learning_rate=0.01, patience=30))
    losses = [r.train_loss for r in result.history]
    assert len(losses) == 30
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


@pytest.mark.slow
def test_overfits_two_routes():
    """100 training paths on two fixed routes are learned almost perfectly with the default settings."""
    graph, trajectories = _two_route_dataset()
    queries = to_queries(trajectories)
    features = build_feature_set(graph, {}, trajectories, "original")
    model = GretelModel(graph, features, ModelConfig(), seed=0)
    initial = loss(model, queries)

    train(model, queries, [], TrainConfig())

    assert loss(model, queries) < initial
    assert precision_top_k(model, queries, 1) >= 95.0
    assert target_probability(model, queries) >= 90.0


def test_best_validation_epoch_is_kept(mini_dataset, mini_documents):
    graph, trajectories = mini_dataset
    features = build_feature_set(graph, mini_documents, trajectories[:2], "original")
    model = GretelModel(graph, features, ModelConfig(hidden_widths=(4,)), seed=1)
    train_queries = to_queries(trajectories[:2])
    validation = to_queries(trajectories[2:])
    result = train(model, train_queries, validation, TrainConfig(epochs=10, learning_rate=0.2, patience=3))
    assert result.best_validation_loss == pytest.approx(loss(model, validation))
    recorded = [r.validation_loss for r in result.history]
    assert result.best_validation_loss <= min(recorded) + 1e-12


def test_overlapping_splits_rejected(mini_model):
    model, queries = mini_model
    with pytest.raises(SplitOverlapError) as excinfo:
        train(model, queries, queries[:1], TrainConfig(epochs=1))
    assert excinfo.value.path_ids == [queries[0].trajectory.path_id]


def test_empty_training_set_rejected(mini_model):
    model, queries = mini_model
    with pytest.raises(EmptyTrainingSetError):
        train(model, [], queries, TrainConfig(epochs=1))


def test_checkpoint_round_trip(tmp_path, mini_dataset, mini_documents):
    graph, trajectories = mini_dataset
    features = build_feature_set(graph, mini_documents, trajectories, "both")
    model = GretelModel(graph, features, ModelConfig(hidden_widths=(4, 3)), seed=4)
    train(model, to_queries(trajectories), [], TrainConfig(epochs=3))
    path = save_checkpoint(model, tmp_path / "checkpoint.json", seed=4)

    restored = load_checkpoint(path, graph, features)
    assert _same_params(_params(model), _params(restored))
    assert restored.config.hidden_widths == (4, 3)
    queries = to_queries(trajectories)
    with torch.no_grad():
        assert torch.equal(model.predict(queries), restored.predict(queries))


def test_checkpoint_is_json(tmp_path, mini_model):
    model, _ = mini_model
    payload = json.loads(save_checkpoint(model, tmp_path / "c.json").read_text())
    assert payload["schema"]["edge_columns"] == ["tfidf", "nof", "sim_hyperedge", "dh_in", "dh_out"]
    assert payload["schema"]["num_nodes"] == 5


def test_checkpoint_refuses_other_feature_schema(tmp_path, mini_dataset, mini_documents):
    graph, trajectories = mini_dataset
    model = GretelModel(graph, build_feature_set(graph, mini_documents, trajectories, "both"))
    path = save_checkpoint(model, tmp_path / "checkpoint.json")
    with pytest.raises(SchemaMismatchError):
        load_checkpoint(path, graph, build_feature_set(graph, mini_documents, trajectories, "sim"))


def test_checkpoint_refuses_other_graph(tmp_path, mini_model, chain_graph):
    model, _ = mini_model
    path = save_checkpoint(model, tmp_path / "checkpoint.json")
    with pytest.raises(SchemaMismatchError):
        load_checkpoint(path, chain_graph, build_feature_set(chain_graph, {}, [], "both"))


def test_distractor_graph_shape():
    graph, trajectories = _two_route_dataset()
    assert graph.n == 20
    assert int(np.sum(graph.out_degree() == 2)) == 10


def test_scaling_is_fitted_on_training_edges(mini_dataset, mini_documents):
    graph, trajectories = mini_dataset
    features = build_feature_set(graph, mini_documents, trajectories[:1], "both")
    scaling = FeatureScaling.fit(features, graph, trajectories[:1])
    model = GretelModel(graph, features, ModelConfig(hidden_widths=(4,)), scaling=scaling)

    followed = sorted({graph.edge_id(s, d) for s, d in trajectories[0].steps()})
    edge_features = model.edge_features.numpy()
    assert np.allclose(edge_features[followed].mean(axis=0), 0.0, atol=1e-12)
    assert model.scaling == scaling


def test_checkpoint_keeps_training_scaling(tmp_path, mini_dataset, mini_documents):
    graph, trajectories = mini_dataset
    features = build_feature_set(graph, mini_documents, trajectories[:2], "both")
    scaling = FeatureScaling.fit(features, graph, trajectories[:2])
    model = GretelModel(graph, features, ModelConfig(hidden_widths=(4,)), seed=2, scaling=scaling)
    path = save_checkpoint(model, tmp_path / "checkpoint.json", seed=2)

    restored = load_checkpoint(path, graph, features)
    assert restored.scaling == scaling
    assert torch.equal(model.edge_features, restored.edge_features)
    assert torch.equal(model.node_features, restored.node_features)
