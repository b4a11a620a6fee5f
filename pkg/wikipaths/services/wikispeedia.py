import logging
from pathlib import Path
from typing import List, Optional, Tuple
from urllib.parse import unquote

from wikipaths.core.constants import DEFAULT_OBSERVED
from wikipaths.core.exceptions import DatasetFileMissingError, DatasetFormatError
from wikipaths.models.graph import NavGraph
from wikipaths.models.trajectory import Trajectory
from wikipaths.services.graph_builder import graph_from_title_paths

logger = logging.getLogger(__name__)

BACK_CLICK = "<"


def expand_back_clicks(steps: List[str]) -> List[str]:
    """Resolve ``<`` by popping the previous article off the navigation stack."""
    stack: List[str] = []
    for step in steps:
        if step == BACK_CLICK:
            if stack:
                stack.pop()
            continue
        stack.append(step)
    return stack


def _data_lines(path: Path):
    if not path.is_file():
        raise DatasetFileMissingError(str(path))
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def read_wikispeedia_paths(paths_file: Path) -> List[List[str]]:
    """Return back-click-expanded title paths, skipping revisits and one-node paths."""
    paths_file = Path(paths_file)
    title_paths = []
    skipped = 0
    for lineno, fields in _data_lines(paths_file):
        column = fields[3] if len(fields) >= 4 else fields[0]
        if not column:
            raise DatasetFormatError(paths_file.name, lineno, "empty path column")
        titles = expand_back_clicks([unquote(step) for step in column.split(";")])
        if len(titles) < 2 or len(set(titles)) != len(titles):
            skipped += 1
            continue
        title_paths.append(titles)
    if skipped:
        logger.info(f"Skipped {skipped} Wikispeedia paths that revisit an article or are too short")
    return title_paths


def read_wikispeedia_links(links_file: Path) -> List[Tuple[str, str]]:
    links_file = Path(links_file)
    links = []
    for lineno, fields in _data_lines(links_file):
        if len(fields) < 2:
            raise DatasetFormatError(links_file.name, lineno, "expected source and target titles")
        src, dst = unquote(fields[0]), unquote(fields[1])
        if src != dst:
            links.append((src, dst))
    return links


def load_wikispeedia(
    paths_file: Path,
    links_file: Optional[Path] = None,
    observed: int = DEFAULT_OBSERVED,
) -> Tuple[NavGraph, List[Trajectory]]:
    """Build a navigation graph and trajectories from Wikispeedia-style files.

    With ``links_file`` the graph also carries every listed link, not only
    the traversed ones.
    """
    title_paths = read_wikispeedia_paths(paths_file)
    extra_edges = read_wikispeedia_links(links_file) if links_file is not None else []
    graph, trajectories = graph_from_title_paths(title_paths, observed=observed, extra_edges=extra_edges)
    logger.info(f"Imported Wikispeedia graph: n={graph.n}, m={graph.m}, paths={len(trajectories)}")
    return graph, trajectories
