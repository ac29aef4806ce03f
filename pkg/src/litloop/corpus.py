"""The literature set: paper records, citation expansion, and persistence.

A corpus grows in three ways: seed retrieval from the idea text, one-hop
citation expansion from extracted facet statements, and explicit user
additions. Provenance is stamped once and never changes. The whole store
round-trips losslessly through a directory of JSON files.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .backends import BackendError, ScholarlyBackend
from .facets import FacetStatements

log = logging.getLogger(__name__)

DEFAULT_SEED_CAP = 50
STORE_FORMAT = 1


class Provenance(str, Enum):
    SEED_RETRIEVAL = "seed_retrieval"
    CITATION_EXPANSION = "citation_expansion"
    USER_ADDED = "user_added"


class FetchStatus(str, Enum):
    FULL_TEXT = "full_text"
    ABSTRACT_ONLY = "abstract_only"
    METADATA_ONLY = "metadata_only"


class Relevance(str, Enum):
    PERFECTLY_RELEVANT = "perfectly_relevant"
    SOMEWHAT_RELEVANT = "somewhat_relevant"
    COMPLEMENTARY = "complementary"
    NOT_RELEVANT = "not_relevant"


class CorpusError(Exception):
    pass


class RetrievalError(CorpusError):
    """Seed retrieval failed; the corpus was left unchanged."""


class UnknownPaperError(CorpusError):
    def __init__(self, paper_id: str):
        self.paper_id = paper_id
        super().__init__(f"paper {paper_id!r} is not in the corpus")


class UnresolvablePaperError(CorpusError):
    def __init__(self, paper_id: str):
        self.paper_id = paper_id
        super().__init__(f"paper {paper_id!r} could not be resolved")


class CorpusLoadError(CorpusError):
    """A stored corpus file is corrupt; the message names file and position."""


@dataclass
class PaperRecord:
    paper_id: str
    title: str = ""
    abstract: str = ""
    sections: dict[str, str] = field(default_factory=dict)
    facets: FacetStatements = field(default_factory=FacetStatements)
    relevance: Relevance | None = None
    provenance: Provenance = Provenance.SEED_RETRIEVAL
    fetch_status: FetchStatus = FetchStatus.METADATA_ONLY
    fetch_note: str = ""
    extraction_versions: dict[str, str] = field(default_factory=dict)

    def stored_texts(self) -> dict[str, str]:
        """Every text field evidence snippets may be checked against."""
        texts = {"title": self.title, "abstract": self.abstract}
        texts.update(self.sections)
        return texts

    def to_dict(self) -> dict:
        return {
            "paper_id": self.paper_id,
            "title": self.title,
            "abstract": self.abstract,
            "sections": dict(self.sections),
            "facets": self.facets.to_dict(),
            "relevance": self.relevance.value if self.relevance else None,
            "provenance": self.provenance.value,
            "fetch_status": self.fetch_status.value,
            "fetch_note": self.fetch_note,
            "extraction_versions": dict(self.extraction_versions),
        }

    @staticmethod
    def from_dict(data: dict) -> "PaperRecord":
        return PaperRecord(
            paper_id=data["paper_id"],
            title=data["title"],
            abstract=data["abstract"],
            sections=dict(data["sections"]),
            facets=FacetStatements.from_dict(data["facets"]),
            relevance=Relevance(data["relevance"]) if data["relevance"] else None,
            provenance=Provenance(data["provenance"]),
            fetch_status=FetchStatus(data["fetch_status"]),
            fetch_note=data.get("fetch_note", ""),
            extraction_versions=dict(data.get("extraction_versions", {})),
        )


@dataclass(frozen=True)
class ExpansionFailure:
    citing_id: str
    cited_id: str
    reason: str

    def to_dict(self) -> dict:
        return {"citing_id": self.citing_id, "cited_id": self.cited_id, "reason": self.reason}

    @staticmethod
    def from_dict(data: dict) -> "ExpansionFailure":
        return ExpansionFailure(data["citing_id"], data["cited_id"], data["reason"])


@dataclass
class CorpusStore:
    papers: dict[str, PaperRecord] = field(default_factory=dict)
    expansion_failures: list[ExpansionFailure] = field(default_factory=list)

    def add(self, record: PaperRecord) -> bool:
        """Insert a record; returns False (and changes nothing) on a duplicate id."""
        if record.paper_id in self.papers:
            return False
        self.papers[record.paper_id] = record
        return True

    def get(self, paper_id: str) -> PaperRecord:
        try:
            return self.papers[paper_id]
        except KeyError:
            raise UnknownPaperError(paper_id) from None

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self.papers

    def __len__(self) -> int:
        return len(self.papers)

    def ids(self) -> list[str]:
        return list(self.papers)

    def to_dict(self) -> dict:
        return {
            "papers": {pid: record.to_dict() for pid, record in self.papers.items()},
            "expansion_failures": [f.to_dict() for f in self.expansion_failures],
        }

    @staticmethod
    def from_dict(data: dict) -> "CorpusStore":
        store = CorpusStore()
        for paper_id, record in data["papers"].items():
            store.papers[paper_id] = PaperRecord.from_dict(record)
        store.expansion_failures = [
            ExpansionFailure.from_dict(f) for f in data["expansion_failures"]
        ]
        return store


def cited_ids_in_facets(store: CorpusStore) -> dict[str, str]:
    """All citation ids mentioned in facet statements, mapped to the first
    citing paper, in deterministic scan order."""
    cited: dict[str, str] = {}
    for paper in store.papers.values():
        for _, statement in paper.facets.all_statements():
            for cited_id in statement.citations:
                cited.setdefault(cited_id, paper.paper_id)
    return cited


class CorpusBuilder:
    """Runs retrieval, fetching, expansion, and user additions against a backend.

    ``cache_dir`` holds one JSON file per fetched paper so a second fetch of
    the same id touches no backend, even across processes.
    """

    def __init__(
        self,
        backend: ScholarlyBackend,
        cache_dir: str | Path | None = None,
        seed_cap: int = DEFAULT_SEED_CAP,
    ):
        self.backend = backend
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.seed_cap = seed_cap

    # -- seed retrieval -----------------------------------------------------

    def retrieve_seed(self, store: CorpusStore, idea_text: str) -> list[str]:
        if not idea_text.strip():
            raise ValueError("idea text is empty")
        try:
            results = self.backend.search(idea_text, limit=self.seed_cap)
        except BackendError as exc:
            raise RetrievalError(f"paper search failed: {exc}") from exc
        seen: list[str] = []
        for result in results:
            paper_id = result["paper_id"]
            if paper_id in seen:
                continue
            seen.append(paper_id)
            store.add(
                PaperRecord(
                    paper_id=paper_id,
                    title=result.get("title", ""),
                    abstract=result.get("abstract", ""),
                    provenance=Provenance.SEED_RETRIEVAL,
                )
            )
        return seen

    # -- full-text fetch ------------------------------------------------------

    def _cache_path(self, paper_id: str) -> Path | None:
        if not self.cache_dir:
            return None
        digest = hashlib.sha256(paper_id.encode("utf-8")).hexdigest()[:16]
        return self.cache_dir / f"paper-{digest}.json"

    def fetch_fulltext(self, store: CorpusStore, paper_id: str) -> PaperRecord:
        """Populate a record's text. Degrades, never hard-fails: a paper with
        no retrievable full text keeps its abstract or metadata with a note."""
        record = store.get(paper_id)
        if record.fetch_status is not FetchStatus.METADATA_ONLY:
            return record

        cache_path = self._cache_path(paper_id)
        if cache_path and cache_path.exists():
            with cache_path.open(encoding="utf-8") as fh:
                cached = json.load(fh)
            record.title = cached["title"] or record.title
            record.abstract = cached["abstract"] or record.abstract
            record.sections = dict(cached["sections"])
            record.fetch_status = FetchStatus(cached["fetch_status"])
            record.fetch_note = cached["fetch_note"]
            return record

        try:
            sections = self.backend.fulltext(paper_id)
        except BackendError as exc:
            sections = None
            record.fetch_note = f"full-text fetch failed: {exc}"
        if sections:
            record.sections = dict(sections)
            record.fetch_status = FetchStatus.FULL_TEXT
        else:
            if not record.abstract:
                try:
                    meta = self.backend.metadata(paper_id)
                except BackendError as exc:
                    meta = None
                    record.fetch_note = record.fetch_note or f"metadata fetch failed: {exc}"
                if meta:
                    record.title = record.title or meta["title"]
                    record.abstract = meta["abstract"]
            if record.abstract:
                record.fetch_status = FetchStatus.ABSTRACT_ONLY
                record.fetch_note = record.fetch_note or "full text unavailable"
            else:
                record.fetch_status = FetchStatus.METADATA_ONLY
                record.fetch_note = record.fetch_note or "no text available"

        if cache_path:
            payload = {
                "title": record.title,
                "abstract": record.abstract,
                "sections": record.sections,
                "fetch_status": record.fetch_status.value,
                "fetch_note": record.fetch_note,
            }
            cache_path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        return record

    # -- citation expansion ----------------------------------------------------

    def expand_citations(self, store: CorpusStore) -> CorpusStore:
        """One-hop expansion: every paper cited inside an extracted facet
        statement and absent from the corpus is added with expansion
        provenance; unresolvable citations land in expansion_failures."""
        failed_pairs = {(f.citing_id, f.cited_id) for f in store.expansion_failures}
        for cited_id, citing_id in cited_ids_in_facets(store).items():
            if cited_id in store:
                continue
            try:
                meta = self.backend.metadata(cited_id)
            except BackendError as exc:
                meta = None
                reason = f"backend error: {exc}"
            else:
                reason = "id not resolvable"
            if meta is None:
                if (citing_id, cited_id) not in failed_pairs:
                    store.expansion_failures.append(
                        ExpansionFailure(citing_id, cited_id, reason)
                    )
                    failed_pairs.add((citing_id, cited_id))
                continue
            store.add(
                PaperRecord(
                    paper_id=cited_id,
                    title=meta["title"],
                    abstract=meta["abstract"],
                    provenance=Provenance.CITATION_EXPANSION,
                    fetch_status=FetchStatus.ABSTRACT_ONLY
                    if meta["abstract"]
                    else FetchStatus.METADATA_ONLY,
                )
            )
        return store

    # -- user additions ----------------------------------------------------------

    def add_paper(self, store: CorpusStore, paper_id: str) -> tuple[PaperRecord, bool]:
        """Add a paper by id. Returns (record, newly_added); adding an id that
        is already present is a no-op, not an error."""
        if paper_id in store:
            return store.get(paper_id), False
        try:
            meta = self.backend.metadata(paper_id)
        except BackendError as exc:
            raise UnresolvablePaperError(paper_id) from exc
        if meta is None:
            raise UnresolvablePaperError(paper_id)
        record = PaperRecord(
            paper_id=paper_id,
            title=meta["title"],
            abstract=meta["abstract"],
            provenance=Provenance.USER_ADDED,
        )
        store.add(record)
        return record, True


# -- persistence ----------------------------------------------------------------


def _paper_filename(paper_id: str) -> str:
    digest = hashlib.sha256(paper_id.encode("utf-8")).hexdigest()[:16]
    return f"{digest}.json"


def persist(store: CorpusStore, path: str | Path) -> None:
    """Write the corpus as a manifest plus one JSON file per paper."""
    root = Path(path)
    papers_dir = root / "papers"
    papers_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": STORE_FORMAT,
        "papers": {pid: _paper_filename(pid) for pid in store.papers},
        "expansion_failures": [f.to_dict() for f in store.expansion_failures],
    }
    for paper_id, record in store.papers.items():
        target = papers_dir / _paper_filename(paper_id)
        target.write_text(
            json.dumps(record.to_dict(), sort_keys=True, indent=2), encoding="utf-8"
        )
    (root / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2), encoding="utf-8"
    )


def load(path: str | Path) -> CorpusStore:
    """Load a persisted corpus; a corrupt file fails with the offending file
    and parse position named."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise CorpusLoadError(f"{manifest_path}: not found")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusLoadError(
            f"{manifest_path}: invalid JSON at line {exc.lineno} column {exc.colno}"
        ) from exc
    if manifest.get("format") != STORE_FORMAT:
        raise CorpusLoadError(f"{manifest_path}: unsupported format {manifest.get('format')!r}")

    store = CorpusStore()
    for paper_id, filename in manifest.get("papers", {}).items():
        paper_path = root / "papers" / filename
        if not paper_path.exists():
            raise CorpusLoadError(f"{paper_path}: missing (record {paper_id!r})")
        try:
            data = json.loads(paper_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CorpusLoadError(
                f"{paper_path}: invalid JSON at line {exc.lineno} column {exc.colno}"
                f" (record {paper_id!r})"
            ) from exc
        try:
            record = PaperRecord.from_dict(data)
        except (KeyError, ValueError) as exc:
            raise CorpusLoadError(f"{paper_path}: bad record {paper_id!r}: {exc}") from exc
        store.add(record)
    for entry in manifest.get("expansion_failures", []):
        store.expansion_failures.append(ExpansionFailure.from_dict(entry))
    return store
