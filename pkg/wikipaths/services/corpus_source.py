"""Article corpora the path generator walks over.

Snapshot layout: one UTF-8 file per article; line 1 is the title, line 2 the
comma-joined ordered links (``%`` and ``,`` inside a title percent-encoded),
everything after is body text.
"""

import hashlib
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import httpx
import numpy as np

from wikipaths.core.constants import (
    DEFAULT_POLITENESS_DELAY,
    DEFAULT_USER_AGENT,
    WIKIPEDIA_API_URL,
)
from wikipaths.core.decorators import with_retry
from wikipaths.core.exceptions import ArticleNotFoundError, CorpusError, FetchError
from wikipaths.models.corpus import ArticleDocument
from wikipaths.services.prometheus_metrics import FETCH_ERRORS, PAGES_FETCHED
from wikipaths.services.rate_limiter import RateLimiter

logger = logging.getLogger(__name__)

SYNTHETIC_WORDS = (
    "river", "mountain", "city", "church", "empire", "battle", "village", "museum",
    "harbour", "festival", "dynasty", "railway", "university", "lake", "fortress",
    "province", "monastery", "olive", "wine", "theatre", "bridge", "island", "market",
    "treaty", "poet", "football", "airport", "canal", "valley", "temple",
)


def encode_link(title: str) -> str:
    return title.replace("%", "%25").replace(",", "%2C")


def decode_link(text: str) -> str:
    return text.replace("%2C", ",").replace("%25", "%")


def snapshot_filename(title: str) -> str:
    return hashlib.sha1(title.encode("utf-8")).hexdigest()[:20] + ".txt"


def write_snapshot(documents: Iterable[ArticleDocument], directory: Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for doc in documents:
        text = f"{doc.title}\n{','.join(encode_link(link) for link in doc.links)}\n{doc.body}"
        with open(directory / snapshot_filename(doc.title), "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    return directory


def read_snapshot_file(path: Path) -> ArticleDocument:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n", 2)
    title = lines[0].strip()
    if not title:
        raise CorpusError(f"Snapshot file {path} has no title line")
    link_line = lines[1] if len(lines) > 1 else ""
    links = tuple(decode_link(part) for part in link_line.split(",") if part)
    body = lines[2] if len(lines) > 2 else ""
    return ArticleDocument(title=title, body=body, links=links)


class CorpusSource(ABC):
    """Resolves article titles to documents."""

    kind: str = "abstract"
    politeness_delay: float = 0.0

    @abstractmethod
    def get_document(self, title: str) -> ArticleDocument:
        """Return the article or raise ``ArticleNotFoundError``."""

    def has(self, title: str) -> bool:
        try:
            self.get_document(title)
            return True
        except ArticleNotFoundError:
            return False

    def documents_for(self, titles: Sequence[str]) -> Dict[str, ArticleDocument]:
        """Documents for ``titles``; unresolvable titles map to an empty document."""
        resolved = {}
        for title in titles:
            try:
                resolved[title] = self.get_document(title)
            except ArticleNotFoundError:
                resolved[title] = ArticleDocument(title=title)
        return resolved


class InMemoryCorpusSource(CorpusSource):
    kind = "local-snapshot"

    def __init__(self, documents: Iterable[ArticleDocument]):
        self._documents: Dict[str, ArticleDocument] = {}
        for doc in documents:
            if doc.title in self._documents:
                raise CorpusError(f"Duplicate article in corpus: {doc.title!r}")
            self._documents[doc.title] = doc

    @classmethod
    def from_links(cls, links: Dict[str, Sequence[str]], bodies: Optional[Dict[str, str]] = None):
        bodies = bodies or {}
        return cls(
            ArticleDocument(title=title, links=tuple(targets), body=bodies.get(title, ""))
            for title, targets in links.items()
        )

    def get_document(self, title: str) -> ArticleDocument:
        try:
            return self._documents[title]
        except KeyError:
            raise ArticleNotFoundError(title) from None

    @property
    def titles(self) -> List[str]:
        return list(self._documents)

    def __len__(self) -> int:
        return len(self._documents)


class LocalSnapshotSource(InMemoryCorpusSource):
    """A recorded corpus directory, read eagerly in file-name order."""

    def __init__(self, directory: Path):
        directory = Path(directory)
        if not directory.is_dir():
            raise CorpusError(f"Corpus directory not found: {directory}")
        files = sorted(p for p in directory.iterdir() if p.is_file() and not p.name.startswith("."))
        super().__init__(read_snapshot_file(p) for p in files)
        self.directory = directory
        logger.info(f"Loaded {len(self)} articles from snapshot {directory}")


class SyntheticCorpusSource(InMemoryCorpusSource):
    """Seeded random corpus with titles ``Article 000`` onwards."""

    kind = "synthetic"

    def __init__(self, num_articles: int = 50, links_per_article: int = 4, seed: int = 0, body_words: int = 20):
        if num_articles < 2:
            raise CorpusError("A synthetic corpus needs at least 2 articles")
        rng = np.random.default_rng(seed)
        width = max(3, len(str(num_articles - 1)))
        titles = [f"Article {i:0{width}d}" for i in range(num_articles)]
        k = min(links_per_article, num_articles - 1)
        documents = []
        for i, title in enumerate(titles):
            others = [j for j in range(num_articles) if j != i]
            targets = rng.choice(others, size=k, replace=False)
            words = rng.choice(len(SYNTHETIC_WORDS), size=body_words)
            documents.append(
                ArticleDocument(
                    title=title,
                    links=tuple(titles[j] for j in targets),
                    body=" ".join(SYNTHETIC_WORDS[w] for w in words),
                )
            )
        super().__init__(documents)
        self.seed = seed


class LiveFetchSource(CorpusSource):
    """MediaWiki API adapter. Every request waits on the shared rate limiter.

    Fetched articles are cached in snapshot format under ``cache_dir``.
    """

    kind = "live-fetch"

    def __init__(
        self,
        cache_dir: Path,
        politeness_delay: float = DEFAULT_POLITENESS_DELAY,
        user_agent: Optional[str] = None,
        rate_limiter: Optional[RateLimiter] = None,
        transport: Optional[httpx.BaseTransport] = None,
        api_url: str = WIKIPEDIA_API_URL,
    ):
        self.politeness_delay = politeness_delay
        self.rate_limiter = rate_limiter or RateLimiter(politeness_delay)
        self.cache_dir = Path(cache_dir) / "articles"
        self.api_url = api_url
        self.client = httpx.Client(
            headers={"User-Agent": user_agent or DEFAULT_USER_AGENT},
            timeout=30.0,
            transport=transport,
        )
        self._memo: Dict[str, ArticleDocument] = {}

    def close(self) -> None:
        self.client.close()

    @with_retry(retry_on=(httpx.HTTPError,), error_counter=FETCH_ERRORS)
    def _api_get(self, params: Dict[str, str]) -> dict:
        self.rate_limiter.wait()
        response = self.client.get(self.api_url, params={**params, "format": "json"})
        response.raise_for_status()
        return response.json()

    def _request(self, params: Dict[str, str]) -> dict:
        try:
            return self._api_get(params)
        except httpx.HTTPError as e:
            raise FetchError(f"MediaWiki request failed for {params.get('page') or params.get('titles')}: {e}") from e

    def _fetch_links(self, title: str) -> Tuple[str, ...]:
        payload = self._request({"action": "parse", "page": title, "prop": "links", "redirects": "1"})
        if "error" in payload:
            if payload["error"].get("code") == "missingtitle":
                raise ArticleNotFoundError(title)
            raise FetchError(f"MediaWiki error for {title!r}: {payload['error'].get('info')}")
        links = payload.get("parse", {}).get("links", [])
        return tuple(link["*"] for link in links if link.get("ns") == 0)

    def _fetch_body(self, title: str) -> str:
        payload = self._request(
            {"action": "query", "prop": "extracts", "explaintext": "1", "titles": title, "redirects": "1"}
        )
        pages = payload.get("query", {}).get("pages", {})
        for page in pages.values():
            return page.get("extract", "") or ""
        return ""

    def get_document(self, title: str) -> ArticleDocument:
        if title in self._memo:
            return self._memo[title]
        cached = self.cache_dir / snapshot_filename(title)
        if cached.is_file():
            doc = read_snapshot_file(cached)
        else:
            doc = ArticleDocument(title=title, links=self._fetch_links(title), body=self._fetch_body(title))
            write_snapshot([doc], self.cache_dir)
            PAGES_FETCHED.inc()
            logger.debug(f"Fetched {title!r}: {len(doc.links)} links")
        self._memo[title] = doc
        return doc
