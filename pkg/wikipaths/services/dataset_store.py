"""WCM dataset directory: seven headerless TSV files plus an optional GraphML export.

``observations.tsv`` stores the observed prefix as ``step:node_id`` pairs
(steps from 0). ``hyperedges.tsv`` stores, per node, every incident edge id
in ascending order. Both layouts are defined by this package.
"""

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from pydantic import ValidationError

from wikipaths.core.constants import DATASET_FILES, FALLBACK_CATEGORY
from wikipaths.core.exceptions import (
    DanglingIdError,
    DatasetFileMissingError,
    DatasetFormatError,
    InconsistentDatasetError,
    SplitError,
    WikipathsError,
)
from wikipaths.models.graph import ArticleNode, DirectedEdge, NavGraph
from wikipaths.models.trajectory import Trajectory, default_prefix_len
from wikipaths.services.graph_builder import validate_trajectories
from wikipaths.utils.tsv import parse_int, parse_int_list, read_tsv, write_tsv

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetSplit:
    train: Tuple[Trajectory, ...]
    validation: Tuple[Trajectory, ...]
    test: Tuple[Trajectory, ...]

    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)


def save_dataset(
    graph: NavGraph,
    trajectories: Sequence[Trajectory],
    categories: Optional[Mapping[int, str]],
    directory: Path,
) -> Path:
    """Write the seven dataset files. Nodes without a category get the fallback."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    validate_trajectories(graph, trajectories)
    categories = categories or {}
    ordered = sorted(trajectories, key=lambda t: t.path_id)

    write_tsv(directory / "articles.tsv", ((node.id, node.title) for node in graph.nodes))
    write_tsv(directory / "edges.tsv", ((e.id, e.src, e.dst) for e in graph.edges))
    write_tsv(
        directory / "categories.tsv",
        ((node.id, categories.get(node.id, FALLBACK_CATEGORY)) for node in graph.nodes),
    )
    write_tsv(
        directory / "hyperedges.tsv",
        (
            (i, ",".join(str(e) for e in sorted(graph.in_adjacency[i] + graph.out_adjacency[i])))
            for i in range(graph.n)
        ),
    )
    write_tsv(directory / "paths.tsv", ((t.path_id, ",".join(map(str, t.node_ids))) for t in ordered))
    write_tsv(directory / "lengths.tsv", ((t.path_id, t.length) for t in ordered))
    write_tsv(
        directory / "observations.tsv",
        ((t.path_id, ",".join(f"{step}:{node}" for step, node in enumerate(t.prefix))) for t in ordered),
    )
    logger.info(f"Saved dataset to {directory}: n={graph.n}, m={graph.m}, paths={len(ordered)}")
    return directory


def _load_graph(directory: Path) -> NavGraph:
    nodes: List[ArticleNode] = []
    for lineno, (ident, title) in read_tsv(directory / "articles.tsv", 2):
        node_id = parse_int(ident, "articles.tsv", lineno)
        if node_id != len(nodes):
            raise DatasetFormatError("articles.tsv", lineno, f"expected id {len(nodes)}, got {node_id}")
        nodes.append(ArticleNode(id=node_id, title=title))
    if not nodes:
        raise DatasetFormatError("articles.tsv", 0, "no articles")

    edges: List[DirectedEdge] = []
    for lineno, fields in read_tsv(directory / "edges.tsv", 3):
        eid, src, dst = (parse_int(v, "edges.tsv", lineno) for v in fields)
        if eid != len(edges):
            raise DatasetFormatError("edges.tsv", lineno, f"expected edge id {len(edges)}, got {eid}")
        for endpoint in (src, dst):
            if not 0 <= endpoint < len(nodes):
                raise DanglingIdError("edges.tsv", endpoint)
        edges.append(DirectedEdge(id=eid, src=src, dst=dst))

    try:
        return NavGraph(nodes, edges)
    except WikipathsError as e:
        raise InconsistentDatasetError("edges.tsv", str(e)) from e


def _load_categories(directory: Path, graph: NavGraph) -> Dict[int, str]:
    categories: Dict[int, str] = {}
    for lineno, (ident, category) in read_tsv(directory / "categories.tsv", 2):
        node_id = parse_int(ident, "categories.tsv", lineno)
        if not 0 <= node_id < graph.n:
            raise DanglingIdError("categories.tsv", node_id)
        if not category:
            raise DatasetFormatError("categories.tsv", lineno, "empty category")
        categories[node_id] = category
    return categories


def _check_hyperedges(directory: Path, graph: NavGraph) -> None:
    seen = set()
    for lineno, (ident, incident) in read_tsv(directory / "hyperedges.tsv", 2):
        node_id = parse_int(ident, "hyperedges.tsv", lineno)
        if not 0 <= node_id < graph.n:
            raise DanglingIdError("hyperedges.tsv", node_id)
        edge_ids = parse_int_list(incident, "hyperedges.tsv", lineno)
        for eid in edge_ids:
            if not 0 <= eid < graph.m:
                raise DanglingIdError("hyperedges.tsv", eid, kind="edge")
        expected = sorted(graph.in_adjacency[node_id] + graph.out_adjacency[node_id])
        if edge_ids != expected:
            raise InconsistentDatasetError("hyperedges.tsv", f"node {node_id} lists {edge_ids}, graph has {expected}")
        seen.add(node_id)
    if len(seen) != graph.n:
        raise InconsistentDatasetError("hyperedges.tsv", f"covers {len(seen)} of {graph.n} nodes")


def _load_trajectories(directory: Path, graph: NavGraph) -> List[Trajectory]:
    paths: Dict[int, Tuple[int, List[int]]] = {}
    for lineno, (ident, joined) in read_tsv(directory / "paths.tsv", 2):
        path_id = parse_int(ident, "paths.tsv", lineno)
        if path_id in paths:
            raise DatasetFormatError("paths.tsv", lineno, f"duplicate path id {path_id}")
        node_ids = parse_int_list(joined, "paths.tsv", lineno)
        for node_id in node_ids:
            if not 0 <= node_id < graph.n:
                raise DanglingIdError("paths.tsv", node_id)
        paths[path_id] = (lineno, node_ids)

    lengths: Dict[int, int] = {}
    for lineno, (ident, length) in read_tsv(directory / "lengths.tsv", 2):
        path_id = parse_int(ident, "lengths.tsv", lineno)
        if path_id not in paths:
            raise DanglingIdError("lengths.tsv", path_id, kind="path")
        lengths[path_id] = parse_int(length, "lengths.tsv", lineno)

    observed: Dict[int, int] = {}
    for lineno, (ident, joined) in read_tsv(directory / "observations.tsv", 2):
        path_id = parse_int(ident, "observations.tsv", lineno)
        if path_id not in paths:
            raise DanglingIdError("observations.tsv", path_id, kind="path")
        node_ids = paths[path_id][1]
        pairs = joined.split(",") if joined else []
        for step, pair in enumerate(pairs):
            step_text, _, node_text = pair.partition(":")
            if parse_int(step_text, "observations.tsv", lineno) != step:
                raise DatasetFormatError("observations.tsv", lineno, f"steps must count from 0, got {pair!r}")
            node_id = parse_int(node_text, "observations.tsv", lineno)
            if step >= len(node_ids) or node_ids[step] != node_id:
                raise InconsistentDatasetError("observations.tsv", f"path {path_id} step {step} is not node {node_id}")
        observed[path_id] = len(pairs)

    trajectories = []
    for path_id in sorted(paths):
        lineno, node_ids = paths[path_id]
        if path_id in lengths and lengths[path_id] != len(node_ids):
            raise InconsistentDatasetError(
                "lengths.tsv", f"path {path_id} has {len(node_ids)} nodes, length says {lengths[path_id]}"
            )
        prefix_len = observed.get(path_id, default_prefix_len(len(node_ids)))
        try:
            trajectories.append(Trajectory(path_id=path_id, node_ids=tuple(node_ids), prefix_len=prefix_len))
        except ValidationError as e:
            raise DatasetFormatError("paths.tsv", lineno, e.errors()[0]["msg"]) from e
    return trajectories


def load_dataset(directory: Path) -> Tuple[NavGraph, List[Trajectory], Dict[int, str]]:
    """Load and cross-validate a dataset directory written by ``save_dataset``."""
    directory = Path(directory)
    for name in DATASET_FILES:
        if not (directory / name).is_file():
            raise DatasetFileMissingError(str(directory / name))

    graph = _load_graph(directory)
    categories = _load_categories(directory, graph)
    _check_hyperedges(directory, graph)
    trajectories = _load_trajectories(directory, graph)
    validate_trajectories(graph, trajectories, file="paths.tsv")

    logger.info(f"Loaded dataset {directory}: n={graph.n}, m={graph.m}, paths={len(trajectories)}")
    return graph, trajectories, categories


def split_dataset(
    trajectories: Sequence[Trajectory],
    ratios: Tuple[float, float, float],
    seed: int,
) -> DatasetSplit:
    """Seeded shuffle then cut into train/validation/test; each part sorted by path id."""
    if not trajectories:
        raise SplitError("Cannot split an empty trajectory list")
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"Split ratios must be three positive numbers summing to 1, got {ratios}")

    total = len(trajectories)
    n_train = int(round(total * ratios[0]))
    n_val = min(int(round(total * ratios[1])), total - n_train)
    order = np.random.default_rng(seed).permutation(total)
    shuffled = [trajectories[i] for i in order]

    def _sorted(part):
        return tuple(sorted(part, key=lambda t: t.path_id))

    split = DatasetSplit(
        train=_sorted(shuffled[:n_train]),
        validation=_sorted(shuffled[n_train : n_train + n_val]),
        test=_sorted(shuffled[n_train + n_val :]),
    )
    logger.debug(f"Split {total} trajectories into {split.sizes()} with seed {seed}")
    return split


def dataset_hash(directory: Path) -> str:
    """sha256 over the dataset files in name order."""
    digest = hashlib.sha256()
    for name in DATASET_FILES:
        path = Path(directory) / name
        if not path.is_file():
            raise DatasetFileMissingError(str(path))
        digest.update(name.encode("utf-8"))
        digest.update(path.read_bytes())
    return digest.hexdigest()


def export_graphml(graph: NavGraph, categories: Optional[Mapping[int, str]], path: Path) -> Path:
    categories = categories or {}
    digraph = nx.DiGraph()
    for node in graph.nodes:
        digraph.add_node(node.id, title=node.title, category=categories.get(node.id, FALLBACK_CATEGORY))
    for edge in graph.edges:
        digraph.add_edge(edge.src, edge.dst, eid=edge.id)
    nx.write_graphml(digraph, str(path))
    return Path(path)


def read_graphml(path: Path) -> Tuple[NavGraph, Dict[int, str]]:
    digraph = nx.read_graphml(str(path), node_type=int)
    nodes = []
    categories = {}
    for node_id in sorted(digraph.nodes):
        attrs = digraph.nodes[node_id]
        nodes.append(ArticleNode(id=node_id, title=attrs["title"]))
        categories[node_id] = attrs.get("category", FALLBACK_CATEGORY)
    edges = sorted(
        (DirectedEdge(id=int(data["eid"]), src=src, dst=dst) for src, dst, data in digraph.edges(data=True)),
        key=lambda e: e.id,
    )
    return NavGraph(nodes, edges), categories
