import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from wikipaths.config import CrawlConfig
from wikipaths.core.constants import INVALID_TITLE_MARKERS, MAX_PATH_ATTEMPTS
from wikipaths.core.exceptions import ArticleNotFoundError, CorpusError, CorpusExhaustedError
from wikipaths.models.corpus import ArticleDocument
from wikipaths.models.graph import NavGraph
from wikipaths.models.trajectory import GeneratedPath, Trajectory
from wikipaths.services.corpus_source import CorpusSource
from wikipaths.services.graph_builder import graph_from_title_paths
from wikipaths.services.prometheus_metrics import PATHS_DISCARDED, PATHS_GENERATED

logger = logging.getLogger(__name__)


def is_valid_title(title: str) -> bool:
    """False for namespace/ISO/percent/hash/colon titles and digits-only titles.

    ``ISO`` is matched case-sensitively as a substring.
    """
    if not title or title.isdigit():
        return False
    return not any(marker in title for marker in INVALID_TITLE_MARKERS)


def candidate_links(doc: ArticleDocument, visited, config: CrawlConfig) -> List[str]:
    """Successor candidates of ``doc`` in link order under the configured policy."""
    links: List[str] = list(dict.fromkeys(doc.links))
    if config.policy == "dense" and config.window_before_filter:
        links = links[: config.dense_window]
    candidates = [link for link in links if link not in visited and is_valid_title(link)]
    if config.policy == "dense" and not config.window_before_filter:
        candidates = candidates[: config.dense_window]
    return candidates


def _resolve(source: CorpusSource, title: str) -> ArticleDocument:
    try:
        return source.get_document(title)
    except ArticleNotFoundError:
        logger.debug(f"Article {title!r} not in corpus; treating it as a dead end")
        return ArticleDocument(title=title)


def generate_path(
    source: CorpusSource,
    config: CrawlConfig,
    rng: np.random.Generator,
    start_title: Optional[str] = None,
) -> GeneratedPath:
    """One random walk from ``start_title`` (default: the configured seed article).

    The walk stops at a target length drawn uniformly from
    ``[min_len, max_len]`` or earlier when no candidate is left.
    """
    start = start_title or config.seed_title
    if not is_valid_title(start):
        raise CorpusError(f"Start article {start!r} is not a valid title")
    doc = source.get_document(start)

    target_len = int(rng.integers(config.min_len, config.max_len + 1))
    titles = [start]
    visited = {start}
    early = False
    while len(titles) < target_len:
        candidates = candidate_links(doc, visited, config)
        if not candidates:
            early = True
            break
        choice = candidates[int(rng.integers(len(candidates)))]
        titles.append(choice)
        visited.add(choice)
        doc = _resolve(source, choice)

    return GeneratedPath(titles=tuple(titles), target_len=target_len, early_terminated=early)


def generate_paths(source: CorpusSource, config: CrawlConfig) -> List[GeneratedPath]:
    """``config.num_paths`` accepted walks from one seeded rng stream.

    Walks shorter than ``min_len`` are discarded and redrawn, at most
    ``MAX_PATH_ATTEMPTS`` times per slot; the longest walk of at least two
    articles is then accepted.
    """
    rng = np.random.default_rng(config.rng_seed)
    accepted: List[GeneratedPath] = []
    seen: Dict[str, None] = {}
    discarded = 0

    for slot in range(config.num_paths):
        best: Optional[GeneratedPath] = None
        for _ in range(MAX_PATH_ATTEMPTS):
            start = None
            if config.restart_from_random_node and seen:
                pool = list(seen)
                start = pool[int(rng.integers(len(pool)))]
            path = generate_path(source, config, rng, start_title=start)
            if best is None or path.length > best.length:
                best = path
            if path.length >= config.min_len:
                break
            discarded += 1
            PATHS_DISCARDED.labels(policy=config.policy).inc()
        if best.length < config.min_len:
            if best.length < 2:
                raise CorpusExhaustedError(best.titles[0], MAX_PATH_ATTEMPTS)
            logger.warning(f"Slot {slot}: accepting a {best.length}-article path after {MAX_PATH_ATTEMPTS} attempts")

        accepted.append(best)
        for title in best.titles:
            seen.setdefault(title, None)
        PATHS_GENERATED.labels(policy=config.policy).inc()
        if (slot + 1) % 500 == 0:
            logger.info(f"Generated {slot + 1}/{config.num_paths} paths")

    logger.info(
        f"Generated {len(accepted)} paths ({config.policy} policy), discarded {discarded} short walks, "
        f"{len(seen)} distinct articles"
    )
    return accepted


def generate_dataset(source: CorpusSource, config: CrawlConfig) -> Tuple[NavGraph, List[Trajectory]]:
    """Generate the paths and build the graph of exactly the traversed nodes and edges."""
    paths = generate_paths(source, config)
    return graph_from_title_paths([p.titles for p in paths], observed=config.observed)
