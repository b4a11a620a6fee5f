import asyncio
import logging
from typing import List, Optional, Sequence
from urllib.parse import quote

import httpx

from wikipaths.core.constants import (
    DBPEDIA_ONTOLOGY_PREFIX,
    DBPEDIA_RESOURCE_PREFIX,
    DBPEDIA_SPARQL_URL,
    DEFAULT_MAX_IN_FLIGHT,
    DEFAULT_USER_AGENT,
    FALLBACK_CATEGORY,
    SPARQL_TIMEOUT_SECONDS,
)
from wikipaths.models.corpus import CategoryRecord
from wikipaths.services.prometheus_metrics import CATEGORY_FALLBACKS
from wikipaths.services.rate_limiter import RateLimiter
from wikipaths.services.retry_logger import with_retry_logging

logger = logging.getLogger(__name__)

TYPE_QUERY = (
    "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n"
    "SELECT ?type WHERE {{ <{resource}> rdf:type ?type . "
    'FILTER(STRSTARTS(STR(?type), "{ontology}")) }} ORDER BY ?type'
)


def resource_uri(title: str) -> str:
    return DBPEDIA_RESOURCE_PREFIX + quote(title.replace(" ", "_"), safe="_(),'-.!*")


class SparqlClient:
    """SPARQL-over-HTTP client for the DBpedia endpoint.

    Requests share ``rate_limiter`` with the page fetcher when one is passed.
    """

    def __init__(
        self,
        endpoint: str = DBPEDIA_SPARQL_URL,
        timeout: float = SPARQL_TIMEOUT_SECONDS,
        rate_limiter: Optional[RateLimiter] = None,
        transport: Optional[httpx.AsyncBaseTransport] = None,
        user_agent: Optional[str] = None,
    ):
        self.endpoint = endpoint
        self.rate_limiter = rate_limiter or RateLimiter()
        self.client = httpx.AsyncClient(
            timeout=timeout,
            transport=transport,
            headers={
                "User-Agent": user_agent or DEFAULT_USER_AGENT,
                "Accept": "application/sparql-results+json",
            },
        )

    async def __aenter__(self) -> "SparqlClient":
        return self

    async def __aexit__(self, *exc) -> None:
        await self.aclose()

    async def aclose(self) -> None:
        await self.client.aclose()

    @with_retry_logging(max_retries=3, job_name="sparql_query", retry_on=(httpx.TransportError,))
    async def query(self, sparql: str) -> dict:
        await self.rate_limiter.acquire()
        response = await self.client.get(
            self.endpoint,
            params={"query": sparql, "format": "application/sparql-results+json"},
        )
        response.raise_for_status()
        return response.json()

    async def ontology_types(self, title: str) -> List[str]:
        query = TYPE_QUERY.format(resource=resource_uri(title), ontology=DBPEDIA_ONTOLOGY_PREFIX)
        payload = await self.query(query)
        return sorted(binding["type"]["value"] for binding in payload["results"]["bindings"])


def _fallback(title: str, reason: str) -> CategoryRecord:
    CATEGORY_FALLBACKS.labels(reason=reason).inc()
    return CategoryRecord(title=title, category=FALLBACK_CATEGORY)


async def categorize(title: str, client: SparqlClient) -> CategoryRecord:
    """Ontology type of ``title``; any missing type or failure yields the fallback category."""
    try:
        types = await client.ontology_types(title)
    except Exception as e:
        logger.warning(f"Category lookup failed for {title!r}: {type(e).__name__}: {e}")
        return _fallback(title, "error")

    if not types:
        logger.info(f"No ontology type for {title!r}; using {FALLBACK_CATEGORY}")
        return _fallback(title, "no_type")

    category = types[0]
    if category.startswith(DBPEDIA_ONTOLOGY_PREFIX):
        category = category[len(DBPEDIA_ONTOLOGY_PREFIX) :]
    if not category.strip():
        return _fallback(title, "no_type")
    return CategoryRecord(title=title, category=category)


async def categorize_many(
    titles: Sequence[str],
    client: SparqlClient,
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
) -> List[CategoryRecord]:
    """Categorize concurrently with at most ``max_in_flight`` lookups; results keep input order."""
    semaphore = asyncio.Semaphore(max_in_flight)

    async def _one(title: str) -> CategoryRecord:
        async with semaphore:
            return await categorize(title, client)

    return list(await asyncio.gather(*(_one(t) for t in titles)))


def categorize_titles(
    titles: Sequence[str],
    rate_limiter: Optional[RateLimiter] = None,
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    user_agent: Optional[str] = None,
) -> List[CategoryRecord]:
    """Blocking entry point used by the CLI."""

    async def _run():
        async with SparqlClient(rate_limiter=rate_limiter, user_agent=user_agent) as client:
            return await categorize_many(titles, client, max_in_flight=max_in_flight)

    return asyncio.run(_run())
