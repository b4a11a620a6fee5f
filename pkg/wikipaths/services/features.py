"""Primal node/edge features and the dual-hypergraph edge features."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
from pydantic import BaseModel
from sklearn.base import BaseEstimator, TransformerMixin

from wikipaths.core.constants import BASE_EDGE_COLUMNS, DHT_EDGE_COLUMNS, NODE_COLUMNS
from wikipaths.core.exceptions import (
    DatasetFileMissingError,
    DimensionMismatchError,
    FeatureError,
    MissingEdgeError,
    UnknownFeatureConfigError,
)
from wikipaths.models.corpus import ArticleDocument
from wikipaths.models.graph import NavGraph
from wikipaths.models.trajectory import Trajectory
from wikipaths.services.graph_builder import incidence
from wikipaths.services.tfidf import TfidfModel

logger = logging.getLogger(__name__)

FEATURE_CONFIGS: Dict[str, Tuple[str, ...]] = {
    "original": (),
    "sim": ("sim_hyperedge",),
    "dhnode": ("dh_in", "dh_out"),
    "both": DHT_EDGE_COLUMNS,
}

NODE_FEATURES_FILE = "node_features.tsv"
EDGE_FEATURES_FILE = "edge_features.tsv"


@dataclass(frozen=True)
class NodeFeatureMatrix:
    matrix: np.ndarray
    columns: Tuple[str, ...] = NODE_COLUMNS

    @property
    def width(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class EdgeFeatureMatrix:
    """m × d′ edge features; ``columns`` is the schema descriptor."""

    matrix: np.ndarray
    columns: Tuple[str, ...]

    @property
    def width(self) -> int:
        return self.matrix.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.matrix[:, self.columns.index(name)]


@dataclass(frozen=True)
class DualHypergraph:
    """(F*, M*, E*) = (E, Mᵀ, F)."""

    node_features: np.ndarray
    incidence: sp.csr_matrix
    hyperedge_features: np.ndarray

    def as_triple(self) -> Tuple[np.ndarray, sp.csr_matrix, np.ndarray]:
        return self.node_features, self.incidence, self.hyperedge_features


def node_degree_features(graph: NavGraph) -> NodeFeatureMatrix:
    matrix = np.column_stack([graph.in_degree(), graph.out_degree()]).astype(np.float64)
    return NodeFeatureMatrix(matrix=matrix.reshape(graph.n, 2))


def tfidf_edge_similarity(graph: NavGraph, documents: Mapping[str, ArticleDocument]) -> np.ndarray:
    """TF-IDF cosine between each edge's source and destination article bodies."""
    bodies = [documents[t].body if t in documents else "" for t in graph.titles]
    model = TfidfModel().fit(bodies)
    return model.pair_similarities(graph.src, graph.dst)


def nof_counts(graph: NavGraph, train_trajectories: Sequence[Trajectory]) -> np.ndarray:
    """How often each edge is followed in the training trajectories."""
    counts = np.zeros(graph.m, dtype=np.int64)
    for trajectory in train_trajectories:
        for src, dst in trajectory.steps():
            eid = graph.edge_id(src, dst)
            if eid is None:
                raise MissingEdgeError(trajectory.path_id, src, dst)
            counts[eid] += 1
    return counts


def dht(node_features: np.ndarray, incidence_matrix, edge_features: np.ndarray) -> DualHypergraph:
    """Swap nodes and edges: (F, M, E) -> (E, Mᵀ, F). Applying it twice gives back the input."""
    n, m = incidence_matrix.shape
    if node_features.shape[0] != n:
        raise DimensionMismatchError("node feature rows", n, node_features.shape[0])
    if edge_features.shape[0] != m:
        raise DimensionMismatchError("edge feature rows", m, edge_features.shape[0])
    return DualHypergraph(
        node_features=edge_features,
        incidence=sp.csr_matrix(incidence_matrix.T),
        hyperedge_features=node_features,
    )


def similarity_hyperedge(graph: NavGraph) -> np.ndarray:
    """Cosine of the undirected incidence rows of each edge's two endpoints."""
    if graph.m == 0:
        return np.zeros(0, dtype=np.float64)
    rows = incidence(graph, "undirected").entries
    dots = np.asarray(rows[graph.src].multiply(rows[graph.dst]).sum(axis=1)).ravel()
    norms_sq = np.asarray(rows.multiply(rows).sum(axis=1)).ravel()
    denom = np.sqrt(norms_sq[graph.src]) * np.sqrt(norms_sq[graph.dst])
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(denom > 0, dots / denom, 0.0)
    return np.clip(cos, 0.0, 1.0)


def dual_node_degrees(graph: NavGraph) -> Tuple[np.ndarray, np.ndarray]:
    """Raw (in, out) degrees of the dual nodes.

    Every walk e_i -> e_j through a node adds one to out(e_i) and one to in(e_j).
    """
    signed = incidence(graph, "directed").entries
    heads = signed.maximum(0)
    tails = (-signed).maximum(0)
    ones = np.ones(graph.m, dtype=np.float64)
    out_dual = heads.T @ (tails @ ones)
    in_dual = tails.T @ (heads @ ones)
    in_dual = np.rint(np.asarray(in_dual).ravel()).astype(np.int64)
    out_dual = np.rint(np.asarray(out_dual).ravel()).astype(np.int64)
    return in_dual, out_dual


def dhnode_in_out_degree(graph: NavGraph) -> np.ndarray:
    """m × 2 (norm_in, norm_out), divided by the largest dual degree; all zero when it is 0."""
    in_dual, out_dual = dual_node_degrees(graph)
    result = np.zeros((graph.m, 2), dtype=np.float64)
    if graph.m == 0:
        return result
    d_max = max(int(in_dual.max()), int(out_dual.max()))
    if d_max == 0:
        return result
    result[:, 0] = in_dual / d_max
    result[:, 1] = out_dual / d_max
    return result


def assemble_edge_features(
    base: np.ndarray,
    extras: Optional[Mapping[str, np.ndarray]] = None,
    selected: Sequence[str] = (),
) -> EdgeFeatureMatrix:
    """(tfidf, nof) followed by the selected columns in the fixed DHT order."""
    extras = extras or {}
    base = np.asarray(base, dtype=np.float64)
    if base.ndim != 2 or base.shape[1] != len(BASE_EDGE_COLUMNS):
        raise DimensionMismatchError("base edge feature width", len(BASE_EDGE_COLUMNS), base.shape)
    m = base.shape[0]
    unknown = set(selected) - set(DHT_EDGE_COLUMNS)
    if unknown:
        raise FeatureError(f"Unknown edge feature columns: {sorted(unknown)}")

    columns = list(BASE_EDGE_COLUMNS)
    blocks = [base]
    for name in DHT_EDGE_COLUMNS:
        if name not in selected:
            continue
        values = np.asarray(extras[name], dtype=np.float64).reshape(-1)
        if values.shape[0] != m:
            raise DimensionMismatchError(f"{name} rows", m, values.shape[0])
        blocks.append(values[:, None])
        columns.append(name)
    return EdgeFeatureMatrix(matrix=np.hstack(blocks), columns=tuple(columns))


class ColumnStandardizer(BaseEstimator, TransformerMixin):
    """Column z-scores; a zero-variance column is only centred."""

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0) if X.shape[0] else np.zeros(X.shape[1])
        std = X.std(axis=0) if X.shape[0] else np.ones(X.shape[1])
        self.scale_ = np.where(std > 0, std, 1.0)
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_


def _reference(matrix: np.ndarray, reference_rows: Optional[np.ndarray]) -> np.ndarray:
    if reference_rows is None or len(reference_rows) == 0:
        return matrix
    return matrix[reference_rows]


def standardize(matrix: np.ndarray, reference_rows: Optional[np.ndarray] = None) -> np.ndarray:
    """Z-scores with column statistics taken from ``reference_rows`` (every row when None or empty)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    return ColumnStandardizer().fit(_reference(matrix, reference_rows)).transform(matrix)


def training_rows(graph: NavGraph, train_trajectories: Sequence[Trajectory]) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending node ids visited and edge ids followed by the training trajectories."""
    nodes = set()
    edges = set()
    for trajectory in train_trajectories:
        nodes.update(trajectory.node_ids)
        for src, dst in trajectory.steps():
            eid = graph.edge_id(src, dst)
            if eid is None:
                raise MissingEdgeError(trajectory.path_id, src, dst)
            edges.add(eid)
    return np.array(sorted(nodes), dtype=np.int64), np.array(sorted(edges), dtype=np.int64)


class FeatureScaling(BaseModel):
    """Column means and scales the model standardizes its inputs with."""

    node_mean: List[float]
    node_scale: List[float]
    edge_mean: List[float]
    edge_scale: List[float]

    @classmethod
    def fit(
        cls, features: "FeatureSet", graph: NavGraph, train_trajectories: Sequence[Trajectory] = ()
    ) -> "FeatureScaling":
        node_rows, edge_rows = training_rows(graph, train_trajectories)
        node = ColumnStandardizer().fit(_reference(features.node.matrix, node_rows))
        edge = ColumnStandardizer().fit(_reference(features.edge.matrix, edge_rows))
        return cls(
            node_mean=node.mean_.tolist(),
            node_scale=node.scale_.tolist(),
            edge_mean=edge.mean_.tolist(),
            edge_scale=edge.scale_.tolist(),
        )

    def apply(self, features: "FeatureSet") -> Tuple[np.ndarray, np.ndarray]:
        if len(self.node_mean) != features.node.width:
            raise DimensionMismatchError("node scaling width", features.node.width, len(self.node_mean))
        if len(self.edge_mean) != features.edge.width:
            raise DimensionMismatchError("edge scaling width", features.edge.width, len(self.edge_mean))
        node = (features.node.matrix - np.array(self.node_mean)) / np.array(self.node_scale)
        edge = (features.edge.matrix - np.array(self.edge_mean)) / np.array(self.edge_scale)
        return node, edge


def config_for_columns(columns: Sequence[str]) -> Optional[str]:
    for name, selected in FEATURE_CONFIGS.items():
        if tuple(columns) == BASE_EDGE_COLUMNS + selected:
            return name
    return None


@dataclass(frozen=True)
class FeatureSet:
    node: NodeFeatureMatrix
    edge: EdgeFeatureMatrix

    def save(self, directory: Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for frame_matrix, columns, name in (
            (self.node.matrix, self.node.columns, NODE_FEATURES_FILE),
            (self.edge.matrix, self.edge.columns, EDGE_FEATURES_FILE),
        ):
            frame = pd.DataFrame(frame_matrix, columns=list(columns))
            frame.to_csv(directory / name, sep="\t", index=False, float_format="%.17g", lineterminator="\n")
        return directory

    @classmethod
    def load(cls, directory: Path) -> "FeatureSet":
        directory = Path(directory)
        frames = {}
        for name in (NODE_FEATURES_FILE, EDGE_FEATURES_FILE):
            path = directory / name
            if not path.is_file():
                raise DatasetFileMissingError(str(path))
            frames[name] = pd.read_csv(path, sep="\t", dtype=np.float64, float_precision="round_trip")
        node_frame, edge_frame = frames[NODE_FEATURES_FILE], frames[EDGE_FEATURES_FILE]
        if tuple(node_frame.columns) != NODE_COLUMNS:
            raise DimensionMismatchError("node feature columns", NODE_COLUMNS, tuple(node_frame.columns))
        edge_columns = tuple(edge_frame.columns)
        if edge_columns not in {BASE_EDGE_COLUMNS + cols for cols in FEATURE_CONFIGS.values()}:
            raise FeatureError(f"Unrecognised edge feature schema {edge_columns}")
        return cls(
            node=NodeFeatureMatrix(matrix=node_frame.to_numpy(dtype=np.float64)),
            edge=EdgeFeatureMatrix(matrix=edge_frame.to_numpy(dtype=np.float64), columns=edge_columns),
        )

    def check_graph(self, graph: NavGraph) -> None:
        if self.node.matrix.shape[0] != graph.n:
            raise DimensionMismatchError("node feature rows", graph.n, self.node.matrix.shape[0])
        if self.edge.matrix.shape[0] != graph.m:
            raise DimensionMismatchError("edge feature rows", graph.m, self.edge.matrix.shape[0])


def build_feature_set(
    graph: NavGraph,
    documents: Mapping[str, ArticleDocument],
    train_trajectories: Sequence[Trajectory],
    config: str = "both",
) -> FeatureSet:
    """Full extraction for one of the ``FEATURE_CONFIGS``."""
    selected = FEATURE_CONFIGS.get(config)
    if selected is None:
        raise UnknownFeatureConfigError(config, FEATURE_CONFIGS)

    base = np.column_stack(
        [tfidf_edge_similarity(graph, documents), nof_counts(graph, train_trajectories).astype(np.float64)]
    ).reshape(graph.m, 2)
    extras: Dict[str, np.ndarray] = {}
    if "sim_hyperedge" in selected:
        extras["sim_hyperedge"] = similarity_hyperedge(graph)
    if "dh_in" in selected:
        degrees = dhnode_in_out_degree(graph)
        extras["dh_in"], extras["dh_out"] = degrees[:, 0], degrees[:, 1]

    edge = assemble_edge_features(base, extras, selected)
    logger.info(f"Extracted '{config}' features: node width 2, edge width {edge.width}, m={graph.m}")
    return FeatureSet(node=node_degree_features(graph), edge=edge)
