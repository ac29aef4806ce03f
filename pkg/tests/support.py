"""Shared helpers for the test suite: document builders, random mutation
generators, and corpus/mock payload builders used by both the unit tests and
the acceptance suite."""

from __future__ import annotations

import random

from litloop.corpus import CorpusStore, PaperRecord, Provenance
from litloop.document import (
    EditOperation,
    FacetSegment,
    FacetType,
    IdeaDocument,
    SegmentStatus,
    apply_edit,
    flag_segments,
    set_segments,
)
from litloop.facets import FacetStatement, FacetStatements

FACET_CYCLE = (FacetType.PROBLEM, FacetType.CONTRIBUTION, FacetType.EVALUATION)


def make_doc(text: str, ranges: list[tuple[int, int]], doc_id: str = "doc-1") -> IdeaDocument:
    """Create a document and install one segment per (start, end) range."""
    doc = IdeaDocument.create(doc_id, text)
    segments = [
        FacetSegment(
            segment_id=f"seg-{i}",
            facet_type=FACET_CYCLE[i % 3],
            start=start,
            end=end,
            content_hash="",
        )
        for i, (start, end) in enumerate(ranges)
    ]
    if segments:
        doc = set_segments(doc, segments)
    return doc


def random_ranges(rng: random.Random, length: int, max_segments: int = 3) -> list[tuple[int, int]]:
    """Non-overlapping, non-empty half-open ranges within [0, length)."""
    if length < 1:
        return []
    count = rng.randint(0, max_segments)
    points = sorted(rng.randint(0, length) for _ in range(2 * count))
    pairs = [(points[2 * i], points[2 * i + 1]) for i in range(count)]
    return [(a, b) for a, b in pairs if a < b]


def random_edit(rng: random.Random, text: str) -> EditOperation:
    start = rng.randint(0, len(text))
    end = rng.randint(start, len(text))
    replacement = "".join(
        rng.choice("abcdefgh XYZ.") for _ in range(rng.randint(0, 8))
    )
    return EditOperation(start, end, replacement)


def random_mutation(rng: random.Random, doc: IdeaDocument) -> IdeaDocument:
    """Apply one randomly chosen valid mutation (edit, re-segment, or flag)."""
    kind = rng.choice(["edit", "edit", "edit", "segments", "flag"])
    if kind == "edit":
        return apply_edit(doc, random_edit(rng, doc.text))
    if kind == "segments":
        ranges = random_ranges(rng, len(doc.text))
        segments = [
            FacetSegment(f"r{doc.version}-{i}", FACET_CYCLE[i % 3], a, b, "")
            for i, (a, b) in enumerate(ranges)
        ]
        return set_segments(doc, segments)
    ids = [s.segment_id for s in doc.segments if rng.random() < 0.5]
    status = rng.choice([SegmentStatus.CURRENT, SegmentStatus.STALE])
    return flag_segments(doc, ids, status)


# -- corpus builders ----------------------------------------------------------


def make_statements(**families) -> FacetStatements:
    """Build FacetStatements from family=(statement, section, [citations]) tuples."""
    statements = FacetStatements()
    for family, entries in families.items():
        statements.family(family)[:] = [
            FacetStatement(text, section, tuple(citations))
            for text, section, citations in entries
        ]
    return statements


def make_paper(
    paper_id: str,
    title: str = "",
    provenance: Provenance = Provenance.SEED_RETRIEVAL,
    **families,
) -> PaperRecord:
    return PaperRecord(
        paper_id=paper_id,
        title=title or f"Paper {paper_id}",
        abstract=f"Abstract of {paper_id}.",
        facets=make_statements(**families),
        provenance=provenance,
    )


def make_store(*papers: PaperRecord) -> CorpusStore:
    store = CorpusStore()
    for paper in papers:
        store.add(paper)
    return store
