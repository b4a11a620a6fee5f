from dataclasses import dataclass
from typing import Dict, Iterator, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from wikipaths.core.exceptions import DuplicateTitleError, GraphError, InvalidEdgeError, UnknownTitleError


class ArticleNode(BaseModel):
    """An article of the navigation graph."""

    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0, description="Dense 0-based node index")
    title: str = Field(..., description="Article title, unique within a graph")


class DirectedEdge(BaseModel):
    """A link from one article to another."""

    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0, description="Dense 0-based edge index")
    src: int = Field(..., ge=0)
    dst: int = Field(..., ge=0)


class NavGraph:
    """Directed article graph with node/edge registries and adjacency lists.

    Immutable after construction. ``src`` and ``dst`` are int64 arrays indexed
    by edge id; ``out_adjacency[i]`` / ``in_adjacency[i]`` list edge ids in
    ascending order.
    """

    def __init__(self, nodes: Sequence[ArticleNode], edges: Sequence[DirectedEdge]):
        if not nodes:
            raise GraphError("A graph needs at least one node")
        self.nodes: Tuple[ArticleNode, ...] = tuple(nodes)
        self.edges: Tuple[DirectedEdge, ...] = tuple(edges)

        self._title_index: Dict[str, int] = {}
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise GraphError(f"Node ids must be contiguous: position {i} holds id {node.id}")
            if node.title in self._title_index:
                raise DuplicateTitleError(node.title)
            self._title_index[node.title] = i

        n = len(self.nodes)
        self._edge_index: Dict[Tuple[int, int], int] = {}
        out_lists = [[] for _ in range(n)]
        in_lists = [[] for _ in range(n)]
        for j, edge in enumerate(self.edges):
            if edge.id != j:
                raise GraphError(f"Edge ids must be contiguous: position {j} holds id {edge.id}")
            if edge.src >= n or edge.dst >= n:
                raise GraphError(f"Edge {j} references a node outside 0..{n - 1}")
            if edge.src == edge.dst:
                raise InvalidEdgeError(self.nodes[edge.src].title, self.nodes[edge.dst].title, "self-loop")
            key = (edge.src, edge.dst)
            if key in self._edge_index:
                raise InvalidEdgeError(self.nodes[edge.src].title, self.nodes[edge.dst].title, "duplicate")
            self._edge_index[key] = j
            out_lists[edge.src].append(j)
            in_lists[edge.dst].append(j)

        self.out_adjacency: Tuple[Tuple[int, ...], ...] = tuple(tuple(a) for a in out_lists)
        self.in_adjacency: Tuple[Tuple[int, ...], ...] = tuple(tuple(a) for a in in_lists)
        self.src = np.array([e.src for e in self.edges], dtype=np.int64)
        self.dst = np.array([e.dst for e in self.edges], dtype=np.int64)
        self.src.setflags(write=False)
        self.dst.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def titles(self) -> Tuple[str, ...]:
        return tuple(node.title for node in self.nodes)

    def node_id(self, title: str) -> int:
        try:
            return self._title_index[title]
        except KeyError:
            raise UnknownTitleError(title, context="graph") from None

    def title(self, node_id: int) -> str:
        return self.nodes[node_id].title

    def edge_id(self, src: int, dst: int) -> Optional[int]:
        return self._edge_index.get((src, dst))

    def has_edge(self, src: int, dst: int) -> bool:
        return (src, dst) in self._edge_index

    def out_degree(self) -> np.ndarray:
        return np.array([len(a) for a in self.out_adjacency], dtype=np.int64)

    def in_degree(self) -> np.ndarray:
        return np.array([len(a) for a in self.in_adjacency], dtype=np.int64)

    def successors(self, node_id: int) -> Iterator[Tuple[int, int]]:
        """Yield ``(edge_id, dst)`` for every outgoing edge of ``node_id``."""
        for eid in self.out_adjacency[node_id]:
            yield eid, int(self.dst[eid])

    def edge_pairs(self) -> Tuple[Tuple[int, int], ...]:
        return tuple((e.src, e.dst) for e in self.edges)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NavGraph):
            return NotImplemented
        return self.titles == other.titles and self.edge_pairs() == other.edge_pairs()

    def __repr__(self) -> str:
        return f"NavGraph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class IncidenceMatrix:
    """Sparse n×m node-edge incidence. Directed mode: -1 at src, +1 at dst."""

    mode: Literal["undirected", "directed"]
    entries: sp.csr_matrix

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    def toarray(self) -> np.ndarray:
        return self.entries.toarray()
