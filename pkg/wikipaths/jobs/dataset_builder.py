import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from wikipaths.config import CrawlConfig
from wikipaths.core.constants import DEFAULT_MAX_IN_FLIGHT
from wikipaths.models.corpus import ArticleDocument
from wikipaths.models.graph import NavGraph
from wikipaths.models.trajectory import Trajectory
from wikipaths.services.categorizer import categorize_titles
from wikipaths.services.corpus_source import CorpusSource, LocalSnapshotSource, write_snapshot
from wikipaths.services.dataset_store import dataset_hash, export_graphml, save_dataset
from wikipaths.services.graph_builder import density
from wikipaths.services.pathgen import generate_dataset
from wikipaths.services.rate_limiter import RateLimiter

logger = logging.getLogger(__name__)

DOCUMENTS_DIR = "documents"
GRAPHML_FILE = "graph.graphml"


def density_summary(graph: NavGraph) -> str:
    value = density(graph.n, graph.m) if graph.n >= 2 else float("nan")
    return f"nodes={graph.n} edges={graph.m} density={value:.6g}"


def write_dataset_bundle(
    graph: NavGraph,
    trajectories: List[Trajectory],
    categories: Mapping[int, str],
    documents: Mapping[str, ArticleDocument],
    output_dir: Path,
) -> Dict[str, Any]:
    """Dataset files, GraphML export and the traversed articles' documents."""
    output_dir = Path(output_dir)
    save_dataset(graph, trajectories, categories, output_dir)
    export_graphml(graph, categories, output_dir / GRAPHML_FILE)
    if documents:
        write_snapshot((documents[t] for t in graph.titles if t in documents), output_dir / DOCUMENTS_DIR)
    return {
        "nodes": graph.n,
        "edges": graph.m,
        "paths": len(trajectories),
        "density": density(graph.n, graph.m) if graph.n >= 2 else None,
        "dataset_hash": dataset_hash(output_dir),
    }


def build_dataset(
    source: CorpusSource,
    config: CrawlConfig,
    output_dir: Path,
    categorize: bool = False,
    rate_limiter: Optional[RateLimiter] = None,
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
) -> Dict[str, Any]:
    graph, trajectories = generate_dataset(source, config)
    categories: Dict[int, str] = {}
    if categorize:
        records = categorize_titles(list(graph.titles), rate_limiter=rate_limiter, max_in_flight=max_in_flight)
        categories = {graph.node_id(r.title): r.category for r in records}
    documents = source.documents_for(graph.titles)
    summary = write_dataset_bundle(graph, trajectories, categories, documents, output_dir)
    logger.info(f"Built dataset in {output_dir}: {density_summary(graph)}")
    return summary


def load_documents(dataset_dir: Path, corpus_dir: Optional[Path] = None) -> Dict[str, ArticleDocument]:
    """Article documents for feature extraction: an explicit corpus, else the dataset's own copy."""
    directory = Path(corpus_dir) if corpus_dir else Path(dataset_dir) / DOCUMENTS_DIR
    if not directory.is_dir():
        logger.warning(f"No article documents at {directory}; TF-IDF similarity will be 0")
        return {}
    source = LocalSnapshotSource(directory)
    return {title: source.get_document(title) for title in source.titles}
