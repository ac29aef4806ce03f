"""Scholarly metadata and full-text backends.

``ScholarlyBackend`` is the seam the corpus builder talks through. The
in-memory implementation replays recorded responses for tests and offline
runs and counts every call; the HTTP implementation is a thin client for a
scholarly-graph API configured by environment variables.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Protocol

import httpx

log = logging.getLogger(__name__)


class BackendError(Exception):
    """The backend could not be reached or answered with an error."""


class ScholarlyBackend(Protocol):
    def search(self, query: str, limit: int) -> list[dict]:
        """Return [{"paper_id", "title", "abstract"}, ...] for a query."""
        ...

    def metadata(self, paper_id: str) -> dict | None:
        """Return {"title", "abstract"} for a resolvable id, else None."""
        ...

    def fulltext(self, paper_id: str) -> dict[str, str] | None:
        """Return {section label: text} when full text is available, else None."""
        ...


class InMemoryBackend:
    """Replays a recorded response set; every call is counted.

    The record format is a single JSON object:
      searches: map of exact query string -> list of paper ids
      papers: map of paper id -> {title, abstract, sections?}
      unresolvable: ids metadata() answers None for
      errors: ids any lookup raises BackendError for
    """

    def __init__(
        self,
        papers: dict[str, dict] | None = None,
        searches: dict[str, list[str]] | None = None,
        unresolvable: set[str] | None = None,
        errors: set[str] | None = None,
    ):
        self.papers = papers or {}
        self.searches = searches or {}
        self.unresolvable = set(unresolvable or ())
        self.errors = set(errors or ())
        self.search_calls = 0
        self.metadata_calls = 0
        self.fulltext_calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "InMemoryBackend":
        with Path(path).open(encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(
            papers=data.get("papers", {}),
            searches=data.get("searches", {}),
            unresolvable=set(data.get("unresolvable", [])),
            errors=set(data.get("errors", [])),
        )

    @property
    def total_calls(self) -> int:
        return self.search_calls + self.metadata_calls + self.fulltext_calls

    def search(self, query: str, limit: int) -> list[dict]:
        self.search_calls += 1
        if query not in self.searches:
            return []
        results = []
        for paper_id in self.searches[query][:limit]:
            entry = self.papers.get(paper_id, {})
            results.append(
                {
                    "paper_id": paper_id,
                    "title": entry.get("title", ""),
                    "abstract": entry.get("abstract", ""),
                }
            )
        return results

    def metadata(self, paper_id: str) -> dict | None:
        self.metadata_calls += 1
        if paper_id in self.errors:
            raise BackendError(f"recorded backend error for {paper_id}")
        if paper_id in self.unresolvable or paper_id not in self.papers:
            return None
        entry = self.papers[paper_id]
        return {"title": entry.get("title", ""), "abstract": entry.get("abstract", "")}

    def fulltext(self, paper_id: str) -> dict[str, str] | None:
        self.fulltext_calls += 1
        if paper_id in self.errors:
            raise BackendError(f"recorded backend error for {paper_id}")
        entry = self.papers.get(paper_id)
        if not entry:
            return None
        sections = entry.get("sections")
        return dict(sections) if sections else None


class HttpBackend:
    """Client for a scholarly-graph HTTP API.

    The base URL defaults to the Semantic Scholar graph API; the key is read
    from the environment so credentials never live in configuration files.
    """

    DEFAULT_BASE = "https://api.semanticscholar.org/graph/v1"
    KEY_ENV = "SCHOLARLY_API_KEY"

    def __init__(self, base_url: str | None = None, timeout: float = 30.0):
        self.base_url = (base_url or self.DEFAULT_BASE).rstrip("/")
        headers = {}
        key = os.environ.get(self.KEY_ENV)
        if key:
            headers["x-api-key"] = key
        self._client = httpx.Client(timeout=timeout, headers=headers)

    def _get(self, path: str, params: dict) -> dict:
        try:
            response = self._client.get(f"{self.base_url}{path}", params=params)
        except httpx.HTTPError as exc:
            raise BackendError(f"request failed: {exc}") from exc
        if response.status_code == 404:
            return {}
        if response.status_code >= 400:
            raise BackendError(f"{path}: HTTP {response.status_code}")
        return response.json()

    def search(self, query: str, limit: int) -> list[dict]:
        data = self._get(
            "/paper/search",
            {"query": query, "limit": limit, "fields": "title,abstract"},
        )
        return [
            {
                "paper_id": item.get("paperId", ""),
                "title": item.get("title") or "",
                "abstract": item.get("abstract") or "",
            }
            for item in data.get("data", [])
            if item.get("paperId")
        ]

    def metadata(self, paper_id: str) -> dict | None:
        data = self._get(f"/paper/{paper_id}", {"fields": "title,abstract"})
        if not data:
            return None
        return {"title": data.get("title") or "", "abstract": data.get("abstract") or ""}

    def fulltext(self, paper_id: str) -> dict[str, str] | None:
        # The public graph API does not serve full text; abstract-only
        # degradation is handled by the corpus builder.
        return None
