"""Evaluation metrics over test queries, all returned as percentages."""

import logging
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import torch

from wikipaths.config import EvalConfig
from wikipaths.core.constants import DEFAULT_CHUNK_SIZE
from wikipaths.core.exceptions import EmptyQuerySetError
from wikipaths.models.graph import NavGraph
from wikipaths.models.trajectory import Query
from wikipaths.services.gretel import GretelModel

logger = logging.getLogger(__name__)


def _require_queries(queries: Sequence[Query]) -> None:
    if not queries:
        raise EmptyQuerySetError("No test queries to evaluate")


def prefix_weights(
    model: GretelModel, prefixes: Sequence[Sequence[int]], chunk_size: int = DEFAULT_CHUNK_SIZE
) -> np.ndarray:
    """Q × m edge weights, one row per prefix."""
    rows = []
    with torch.no_grad():
        for start in range(0, len(prefixes), chunk_size):
            rows.append(model.edge_weights(prefixes[start : start + chunk_size]).numpy())
    if not rows:
        return np.zeros((0, model.m))
    return np.vstack(rows)


def predict_distributions(model: GretelModel, queries: Sequence[Query], chunk_size: int = DEFAULT_CHUNK_SIZE):
    rows = []
    with torch.no_grad():
        for start in range(0, len(queries), chunk_size):
            rows.append(model.predict(queries[start : start + chunk_size]).numpy())
    return np.vstack(rows)


def target_probability(
    model: GretelModel,
    queries: Sequence[Query],
    mode: Literal["mass", "support"] = "mass",
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> float:
    """Mean predicted mass on the true target (or, for ``support``, whether it is nonzero) × 100."""
    _require_queries(queries)
    predictions = predict_distributions(model, queries, chunk_size)
    mass = predictions[np.arange(len(queries)), [q.target for q in queries]]
    if mode == "support":
        mass = (mass > 0).astype(np.float64)
    return float(mass.mean() * 100.0)


def top_edge(weights: np.ndarray, graph: NavGraph, node: int) -> Optional[int]:
    """Highest-weighted outgoing edge of ``node``; ties go to the smallest edge id."""
    best = None
    for eid in graph.out_adjacency[node]:
        if best is None or weights[eid] > weights[best]:
            best = eid
    return best


def choice_accuracy(
    model: GretelModel,
    queries: Sequence[Query],
    degree_mode: Literal["out", "total"] = "out",
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> Optional[float]:
    """Share of crossroads on the true suffix where the model's top edge is the step taken.

    A crossroad is a node the agent leaves between the current node and the
    target whose degree is at least 3. ``None`` when no query has one.
    """
    _require_queries(queries)
    graph = model.graph
    degree = graph.out_degree() if degree_mode == "out" else graph.out_degree() + graph.in_degree()
    weights = prefix_weights(model, [q.prefix for q in queries], chunk_size)

    hits = 0
    total = 0
    for q, query in enumerate(queries):
        walk = (query.current,) + query.suffix
        for node, nxt in zip(walk[:-1], walk[1:]):
            if degree[node] < 3:
                continue
            total += 1
            if top_edge(weights[q], graph, node) == graph.edge_id(node, nxt):
                hits += 1
    if total == 0:
        logger.info("No crossroads of degree >= 3 on the evaluated suffixes; choice accuracy undefined")
        return None
    return hits / total * 100.0


def rank_successors(weights: np.ndarray, graph: NavGraph, node: int) -> List[int]:
    """Successor node ids by descending edge weight, ties by ascending node id."""
    ranked = sorted(graph.successors(node), key=lambda pair: (-weights[pair[0]], pair[1]))
    return [dst for _, dst in ranked]


def next_step_queries(queries: Sequence[Query]) -> List[Tuple[Tuple[int, ...], int]]:
    """Every (prefix, true next node) along each query's full trajectory."""
    steps = []
    for query in queries:
        nodes = query.trajectory.node_ids
        for tau in range(1, len(nodes)):
            steps.append((nodes[:tau], nodes[tau]))
    return steps


def precision_at_ks(
    model: GretelModel,
    queries: Sequence[Query],
    ks: Sequence[int] = (1, 5),
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> Dict[int, float]:
    _require_queries(queries)
    steps = next_step_queries(queries)
    weights = prefix_weights(model, [prefix for prefix, _ in steps], chunk_size)
    hits = {k: 0 for k in ks}
    for row, (prefix, truth) in enumerate(steps):
        ranking = rank_successors(weights[row], model.graph, prefix[-1])
        for k in ks:
            if truth in ranking[:k]:
                hits[k] += 1
    return {k: hits[k] / len(steps) * 100.0 for k in ks}


def precision_top_k(model: GretelModel, queries: Sequence[Query], k: int) -> float:
    return precision_at_ks(model, queries, (k,))[k]


def evaluate_model(
    model: GretelModel,
    queries: Sequence[Query],
    config: Optional[EvalConfig] = None,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> Dict[str, Optional[float]]:
    """All metrics for one trained model."""
    config = config or EvalConfig()
    precision = precision_at_ks(model, queries, (1, 5), chunk_size)
    mass = target_probability(model, queries, "mass", chunk_size)
    support = target_probability(model, queries, "support", chunk_size)
    return {
        "target_probability": support if config.target_mode == "support" else mass,
        "target_support": support,
        "choice_accuracy": choice_accuracy(model, queries, config.degree_mode, chunk_size),
        "precision_top1": precision[1],
        "precision_top5": precision[5],
    }
