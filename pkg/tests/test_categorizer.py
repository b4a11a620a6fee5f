import asyncio
import json

import httpx
import pytest
from pydantic import ValidationError

from wikipaths.core.constants import FALLBACK_CATEGORY
from wikipaths.models.corpus import CategoryRecord
from wikipaths.services.categorizer import SparqlClient, categorize, categorize_many, resource_uri
from wikipaths.services.prometheus_metrics import REGISTRY
from wikipaths.services.rate_limiter import RateLimiter


def _bindings(*types):
    return {"results": {"bindings": [{"type": {"type": "uri", "value": t}} for t in types]}}


def _client(handler, limiter=None):
    return SparqlClient(
        endpoint="https://sparql.test/sparql",
        rate_limiter=limiter or RateLimiter(0.0),
        transport=httpx.MockTransport(handler),
    )


def _fallbacks(reason):
    return REGISTRY.get_sample_value("wikipaths_category_fallbacks_total", {"reason": reason}) or 0.0


def test_resource_uri_uses_underscores():
    assert resource_uri("Central Macedonia") == "http://dbpedia.org/resource/Central_Macedonia"


@pytest.mark.asyncio
async def test_ontology_type_passes_through():
    seen = []

    def handler(request):
        seen.append(request.url.params["query"])
        return httpx.Response(200, json=_bindings("http://dbpedia.org/ontology/Place"))

    async with _client(handler) as client:
        record = await categorize("Thessaloniki", client)
    assert record.category == "Place"
    assert not record.is_fallback
    assert "<http://dbpedia.org/resource/Thessaloniki>" in seen[0]


@pytest.mark.asyncio
async def test_first_type_in_sorted_order_wins():
    seen = []
    unordered = ("http://dbpedia.org/ontology/Settlement", "http://dbpedia.org/ontology/City")

    def handler(request):
        seen.append(request.url.params["query"])
        return httpx.Response(200, json=_bindings(*unordered))

    async with _client(handler) as client:
        first = await categorize("Thessaloniki", client)
        second = await categorize("Thessaloniki", client)
    assert first.category == second.category == "City"
    assert seen[0].rstrip().endswith("ORDER BY ?type")


@pytest.mark.asyncio
async def test_timeout_falls_back():
    calls = []

    def handler(request):
        calls.append(request)
        raise httpx.ReadTimeout("timed out", request=request)

    before = _fallbacks("error")
    async with _client(handler) as client:
        record = await categorize("Thessaloniki", client)
    assert record.category == FALLBACK_CATEGORY
    assert len(calls) == 3
    assert _fallbacks("error") == before + 1


@pytest.mark.asyncio
async def test_empty_result_falls_back():
    before = _fallbacks("no_type")

    def handler(request):
        return httpx.Response(200, json=_bindings())

    async with _client(handler) as client:
        record = await categorize("Nowhere In Particular", client)
    assert record.category == FALLBACK_CATEGORY
    assert _fallbacks("no_type") == before + 1


@pytest.mark.asyncio
async def test_server_error_falls_back_without_retry():
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(503, text="busy")

    async with _client(handler) as client:
        record = await categorize("Athens", client)
    assert record.is_fallback
    assert len(calls) == 1


@pytest.mark.asyncio
async def test_categorize_many_keeps_order_and_shares_limiter():
    types = {
        "Athens": "http://dbpedia.org/ontology/City",
        "Aristotle": "http://dbpedia.org/ontology/Philosopher",
        "Parthenon": "http://dbpedia.org/ontology/Building",
    }

    def handler(request):
        query = request.url.params["query"]
        for title, uri in types.items():
            if f"/resource/{title}>" in query:
                return httpx.Response(200, content=json.dumps(_bindings(uri)).encode())
        return httpx.Response(200, json=_bindings())

    limiter = RateLimiter(0.0)
    async with _client(handler, limiter) as client:
        records = await categorize_many(["Parthenon", "Athens", "Unknown", "Aristotle"], client, max_in_flight=2)
    assert [r.category for r in records] == ["Building", "City", FALLBACK_CATEGORY, "Philosopher"]
    assert len(limiter.history) == 4


@pytest.mark.asyncio
async def test_requests_respect_politeness_delay():
    clock = {"now": 0.0}

    async def fake_sleep(seconds):
        clock["now"] += seconds
        await asyncio.sleep(0)

    limiter = RateLimiter(1.0, clock=lambda: clock["now"], async_sleep=fake_sleep)

    def handler(request):
        return httpx.Response(200, json=_bindings("http://dbpedia.org/ontology/Place"))

    async with _client(handler, limiter) as client:
        await categorize_many(["A", "B", "C"], client, max_in_flight=3)
    assert limiter.history == [0.0, 1.0, 2.0]


def test_category_record_accepts_any_ontology_label():
    assert CategoryRecord(title="Pella", category="ArchaeologicalSite").category == "ArchaeologicalSite"
    with pytest.raises(ValidationError):
        CategoryRecord(title="Pella", category="  ")
