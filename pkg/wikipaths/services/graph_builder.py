import logging
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from wikipaths.core.constants import DEFAULT_OBSERVED
from wikipaths.core.exceptions import (
    DanglingIdError,
    DensityDomainError,
    DuplicateTitleError,
    InvalidEdgeError,
    MissingEdgeError,
    UnknownTitleError,
)
from wikipaths.models.graph import ArticleNode, DirectedEdge, IncidenceMatrix, NavGraph
from wikipaths.models.trajectory import Trajectory, default_prefix_len

logger = logging.getLogger(__name__)


def build_graph(edge_list: Sequence[Tuple[str, str]], node_titles: Sequence[str]) -> NavGraph:
    """Assign dense ids in first-appearance order and collapse duplicate edges."""
    index: Dict[str, int] = {}
    nodes: List[ArticleNode] = []
    for title in node_titles:
        if title in index:
            raise DuplicateTitleError(title)
        index[title] = len(nodes)
        nodes.append(ArticleNode(id=len(nodes), title=title))

    seen = set()
    edges: List[DirectedEdge] = []
    duplicates = 0
    for src_title, dst_title in edge_list:
        if src_title not in index:
            raise UnknownTitleError(src_title)
        if dst_title not in index:
            raise UnknownTitleError(dst_title)
        src, dst = index[src_title], index[dst_title]
        if src == dst:
            raise InvalidEdgeError(src_title, dst_title, "self-loop")
        if (src, dst) in seen:
            duplicates += 1
            continue
        seen.add((src, dst))
        edges.append(DirectedEdge(id=len(edges), src=src, dst=dst))

    if duplicates:
        logger.debug(f"Collapsed {duplicates} duplicate edges")
    return NavGraph(nodes, edges)


def graph_from_title_paths(
    title_paths: Sequence[Sequence[str]],
    observed: int = DEFAULT_OBSERVED,
    extra_edges: Sequence[Tuple[str, str]] = (),
    extra_titles: Sequence[str] = (),
) -> Tuple[NavGraph, List[Trajectory]]:
    """Build the graph traversed by ``title_paths`` and the matching trajectories.

    Node ids follow first appearance across the paths, then ``extra_titles``;
    edge ids follow first traversal, then ``extra_edges``.
    """
    titles: Dict[str, None] = {}
    edges: List[Tuple[str, str]] = []
    for path in title_paths:
        for title in path:
            titles.setdefault(title, None)
        edges.extend(zip(path[:-1], path[1:]))
    for title in extra_titles:
        titles.setdefault(title, None)
    for src, dst in extra_edges:
        titles.setdefault(src, None)
        titles.setdefault(dst, None)
    graph = build_graph(list(edges) + list(extra_edges), list(titles))

    trajectories = []
    for path_id, path in enumerate(title_paths):
        node_ids = tuple(graph.node_id(t) for t in path)
        trajectories.append(
            Trajectory(path_id=path_id, node_ids=node_ids, prefix_len=default_prefix_len(len(node_ids), observed))
        )
    return graph, trajectories


def incidence(graph: NavGraph, mode: Literal["undirected", "directed"] = "undirected") -> IncidenceMatrix:
    """n×m incidence matrix with exactly two nonzeros per column."""
    m = graph.m
    cols = np.concatenate([np.arange(m), np.arange(m)])
    rows = np.concatenate([graph.src, graph.dst])
    if mode == "directed":
        values = np.concatenate([-np.ones(m), np.ones(m)])
    elif mode == "undirected":
        values = np.ones(2 * m)
    else:
        raise ValueError(f"unknown incidence mode {mode!r}")
    entries = sp.csr_matrix((values, (rows, cols)), shape=(graph.n, m), dtype=np.float64)
    return IncidenceMatrix(mode=mode, entries=entries)


def density(n: int, m: int) -> float:
    """Edge density of a loop-free directed graph: m / (n (n - 1))."""
    if n < 2:
        raise DensityDomainError(n)
    return m / (n * (n - 1))


def validate_trajectories(graph: NavGraph, trajectories: Sequence[Trajectory], file: Optional[str] = None) -> None:
    """Check every node id exists and every step is an edge."""
    for trajectory in trajectories:
        for node_id in trajectory.node_ids:
            if node_id >= graph.n:
                raise DanglingIdError(file or "trajectories", node_id)
        for src, dst in trajectory.steps():
            if not graph.has_edge(src, dst):
                raise MissingEdgeError(trajectory.path_id, src, dst)
