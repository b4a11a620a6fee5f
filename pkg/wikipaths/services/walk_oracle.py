from typing import Optional

import numpy as np

from wikipaths.core.constants import ORACLE_MAX_HORIZON, ORACLE_MAX_NODES
from wikipaths.core.exceptions import OracleSizeError
from wikipaths.models.graph import NavGraph


def brute_force_walk_oracle(graph: NavGraph, weights: np.ndarray, x_t: np.ndarray, h: int) -> np.ndarray:
    """Endpoint distribution by enumerating every non-backtracking walk of ``h`` steps.

    The first step from a node uses the plain edge weight; later steps are
    renormalized over the successors that do not reverse the previous step.
    """
    if graph.n > ORACLE_MAX_NODES or h > ORACLE_MAX_HORIZON:
        raise OracleSizeError(graph.n, h, ORACLE_MAX_NODES, ORACLE_MAX_HORIZON)
    if h < 1:
        raise ValueError("horizon must be at least 1")
    weights = np.asarray(weights, dtype=np.float64)
    result = np.zeros(graph.n, dtype=np.float64)

    def walk(previous: Optional[int], node: int, probability: float, remaining: int) -> None:
        if remaining == 0:
            result[node] += probability
            return
        choices = [f for f in graph.out_adjacency[node] if previous is None or graph.dst[f] != previous]
        if previous is None:
            for f in choices:
                walk(node, int(graph.dst[f]), probability * weights[f], remaining - 1)
            return
        total = sum(weights[f] for f in choices)
        if total <= 0.0:
            return
        for f in choices:
            walk(node, int(graph.dst[f]), probability * weights[f] / total, remaining - 1)

    for start in range(graph.n):
        if x_t[start] > 0:
            walk(None, start, float(x_t[start]), h)
    return result
