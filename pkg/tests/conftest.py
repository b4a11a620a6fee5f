import numpy as np
import pytest

from wikipaths.models.corpus import ArticleDocument
from wikipaths.models.graph import ArticleNode, DirectedEdge, NavGraph
from wikipaths.services.corpus_source import InMemoryCorpusSource, write_snapshot
from wikipaths.services.graph_builder import graph_from_title_paths

MINI_PATHS = [
    ["Thessaloniki", "Aristotle", "Athens", "Parthenon"],
    ["Thessaloniki", "Aristotle", "Macedonia"],
    ["Aristotle", "Athens", "Parthenon", "Macedonia"],
]

MINI_BODIES = {
    "Thessaloniki": "port city of macedonia on the thermaic gulf",
    "Aristotle": "philosopher born in stagira macedonia student of plato",
    "Athens": "capital city of greece home of the parthenon",
    "Parthenon": "temple on the acropolis of athens",
    "Macedonia": "region of northern greece with thessaloniki as its capital",
}


def make_graph(n, edge_pairs):
    nodes = [ArticleNode(id=i, title=f"v{i}") for i in range(n)]
    edges = [DirectedEdge(id=j, src=s, dst=d) for j, (s, d) in enumerate(edge_pairs)]
    return NavGraph(nodes, edges)


def random_graph(rng, n, p):
    """Loop-free random digraph on ``n`` nodes with edge probability ``p``."""
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j and rng.random() < p]
    return make_graph(n, pairs)


@pytest.fixture
def graph_factory():
    return make_graph


@pytest.fixture
def random_graph_factory():
    return random_graph


@pytest.fixture
def chain_graph():
    """A -> B -> C."""
    return make_graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def cycle_graph():
    """Directed 3-cycle."""
    return make_graph(3, [(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def mini_dataset():
    """5-article graph with 3 trajectories."""
    graph, trajectories = graph_from_title_paths(MINI_PATHS, observed=2)
    return graph, trajectories


@pytest.fixture
def mini_paths():
    return [list(path) for path in MINI_PATHS]


@pytest.fixture
def mini_documents():
    return {title: ArticleDocument(title=title, body=body) for title, body in MINI_BODIES.items()}


def chain_links(length=10, prefix="Chain"):
    titles = [f"{prefix} {i}" for i in range(length)]
    links = {title: [titles[i + 1]] if i + 1 < length else [] for i, title in enumerate(titles)}
    return titles, links


@pytest.fixture
def chain_corpus():
    """10 articles where each links only to the next."""
    titles, links = chain_links()
    return InMemoryCorpusSource.from_links(links, {t: f"article {t.lower()}" for t in titles})


@pytest.fixture
def mini_corpus_dir(tmp_path):
    """A recorded snapshot of a small linked corpus."""
    rng = np.random.default_rng(3)
    titles = [f"Town {i:02d}" for i in range(24)]
    documents = []
    for i, title in enumerate(titles):
        others = [t for t in titles if t != title]
        links = tuple(str(t) for t in rng.choice(others, size=6, replace=False))
        documents.append(ArticleDocument(title=title, body=f"town number {i} in the valley", links=links))
    return write_snapshot(documents, tmp_path / "corpus")
