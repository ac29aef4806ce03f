"""Facet extraction from papers and idea segmentation.

A paper yields eight families of facet statements (problems, contributions,
evaluations, motivations, methods, results, limitations, future work), each
statement tagged with its source section and the papers it cites. The
researcher's idea is segmented into the three core facets with verbatim,
locatable spans. Both operations go through the gateway; everything after the
model reply is deterministic normalization.
"""

from __future__ import annotations

import difflib
import logging
from dataclasses import dataclass, field, fields
from typing import Iterator

from .document import CORE_FACETS, FacetSegment, FacetType
from .gateway import Gateway, RetryExhaustedError, TaskRequest
from .prompts import PROMPT_VERSION

log = logging.getLogger(__name__)

FACET_FAMILIES = (
    "problems",
    "contributions",
    "evaluations",
    "motivations",
    "methods",
    "results",
    "limitations",
    "future_work",
)

CORE_FAMILY = {
    FacetType.PROBLEM: "problems",
    FacetType.CONTRIBUTION: "contributions",
    FacetType.EVALUATION: "evaluations",
}

FAMILY_HINTS = {
    "problems": "A problem statement names something wrong, unsolved, or costly.",
    "contributions": "A contribution statement says what the paper builds, proves, or shows.",
    "evaluations": "An evaluation statement says how the paper measures success.",
    "motivations": "A motivation statement says why the work matters or who needs it.",
    "methods": "A method statement describes a technique or procedure the paper uses.",
    "results": "A result statement reports a concrete outcome or measurement.",
    "limitations": "A limitation statement concedes a shortcoming of the paper's approach.",
    "future_work": "A future-work statement names something the authors leave to later work.",
}

# Character budget for one extraction prompt; papers larger than this are
# chunked by section and the per-chunk statement lists concatenated.
CHUNK_CHARS = 24_000

MIN_ANCHOR_RATIO = 0.8


class ExtractionError(Exception):
    pass


class SegmentationError(Exception):
    """Raised when no returned segment could be anchored to the idea text."""


@dataclass(frozen=True)
class FacetStatement:
    statement: str
    source_section: str
    citations: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "statement": self.statement,
            "source_section": self.source_section,
            "citations": list(self.citations),
        }

    @staticmethod
    def from_dict(data: dict) -> "FacetStatement":
        return FacetStatement(
            statement=data["statement"],
            source_section=data["source_section"],
            citations=tuple(data["citations"]),
        )


@dataclass
class FacetStatements:
    problems: list[FacetStatement] = field(default_factory=list)
    contributions: list[FacetStatement] = field(default_factory=list)
    evaluations: list[FacetStatement] = field(default_factory=list)
    motivations: list[FacetStatement] = field(default_factory=list)
    methods: list[FacetStatement] = field(default_factory=list)
    results: list[FacetStatement] = field(default_factory=list)
    limitations: list[FacetStatement] = field(default_factory=list)
    future_work: list[FacetStatement] = field(default_factory=list)

    def family(self, name: str) -> list[FacetStatement]:
        if name not in FACET_FAMILIES:
            raise KeyError(f"unknown facet family: {name}")
        return getattr(self, name)

    def all_statements(self) -> Iterator[tuple[str, FacetStatement]]:
        for name in FACET_FAMILIES:
            for statement in self.family(name):
                yield name, statement

    def is_empty(self) -> bool:
        return not any(self.family(name) for name in FACET_FAMILIES)

    def to_dict(self) -> dict:
        return {
            name: [s.to_dict() for s in self.family(name)] for name in FACET_FAMILIES
        }

    @staticmethod
    def from_dict(data: dict) -> "FacetStatements":
        kwargs = {
            name: [FacetStatement.from_dict(s) for s in data.get(name, [])]
            for name in FACET_FAMILIES
        }
        return FacetStatements(**kwargs)


assert {f.name for f in fields(FacetStatements)} == set(FACET_FAMILIES)


@dataclass
class SegmentationResult:
    segments: list[tuple[FacetType, tuple[int, int]]]
    missing: set[FacetType]
    dropped: list[str] = field(default_factory=list)

    def to_facet_segments(self) -> list[FacetSegment]:
        """Materialize segments with deterministic per-type ids."""
        counters: dict[FacetType, int] = {}
        out = []
        for facet_type, (start, end) in self.segments:
            counters[facet_type] = counters.get(facet_type, 0) + 1
            out.append(
                FacetSegment(
                    segment_id=f"{facet_type.value}-{counters[facet_type]}",
                    facet_type=facet_type,
                    start=start,
                    end=end,
                    content_hash="",
                )
            )
        return out


# -- paper facet extraction ---------------------------------------------------


def _chunk_sections(sections: dict[str, str], budget: int) -> list[list[tuple[str, str]]]:
    """Greedily pack whole sections into chunks under the character budget.

    A single section larger than the budget is split hard, keeping its label.
    """
    chunks: list[list[tuple[str, str]]] = []
    current: list[tuple[str, str]] = []
    used = 0
    for label, text in sections.items():
        pieces = [text[i : i + budget] for i in range(0, len(text), budget)] or [""]
        for piece in pieces:
            if current and used + len(piece) > budget:
                chunks.append(current)
                current, used = [], 0
            current.append((label, piece))
            used += len(piece)
    if current:
        chunks.append(current)
    return chunks


def _render_chunk(chunk: list[tuple[str, str]]) -> str:
    return "\n\n".join(f"[{label}]\n{text}" for label, text in chunk)


def extract_paper_facets(paper, gateway: Gateway) -> FacetStatements:
    """Extract all eight facet families from one paper.

    Results are written onto ``paper.facets`` and each successfully extracted
    family is stamped with the current prompt version in
    ``paper.extraction_versions``, so repeated calls only re-run families that
    failed or were extracted under an older prompt. A family whose task
    exhausts its retries is left empty with a warning; other families are
    unaffected.
    """
    sections = dict(paper.sections) if paper.sections else {}
    if not sections and paper.abstract:
        sections = {"abstract": paper.abstract}
    if not sections:
        log.warning("paper %s has no text to extract from", paper.paper_id)
        return paper.facets

    chunks = _chunk_sections(sections, CHUNK_CHARS)
    for family in FACET_FAMILIES:
        if paper.extraction_versions.get(family) == PROMPT_VERSION:
            continue
        statements: list[FacetStatement] = []
        try:
            for chunk in chunks:
                request = TaskRequest.for_template(
                    "extract_facets",
                    {
                        "family": family,
                        "family_hint": FAMILY_HINTS[family],
                        "title": paper.title,
                        "paper_id": paper.paper_id,
                        "paper_text": _render_chunk(chunk),
                    },
                )
                response = gateway.execute(request)
                for item in response.parsed["statements"]:
                    statements.append(
                        FacetStatement(
                            statement=item["statement"],
                            source_section=item["source_section"],
                            citations=tuple(item["citations"]),
                        )
                    )
        except RetryExhaustedError as exc:
            log.warning(
                "facet extraction failed for %s/%s: %s", paper.paper_id, family, exc
            )
            continue
        paper.facets.family(family)[:] = statements
        paper.extraction_versions[family] = PROMPT_VERSION
    return paper.facets


# -- idea segmentation --------------------------------------------------------


def _locate(idea_text: str, span_text: str, search_from: int = 0) -> tuple[int, int] | None:
    """Anchor a model-returned span to a real range in the idea text.

    Exact substring match wins; a paraphrase is accepted when its longest
    common substring with the idea covers at least MIN_ANCHOR_RATIO of it.
    """
    span_text = span_text.strip()
    if not span_text:
        return None
    position = idea_text.find(span_text, search_from)
    if position < 0 and search_from:
        position = idea_text.find(span_text)
    if position >= 0:
        return position, position + len(span_text)
    matcher = difflib.SequenceMatcher(None, idea_text, span_text, autojunk=False)
    match = matcher.find_longest_match(0, len(idea_text), 0, len(span_text))
    if match.size and match.size / len(span_text) >= MIN_ANCHOR_RATIO:
        return match.a, match.a + match.size
    return None


def segment_idea(idea_text: str, gateway: Gateway) -> SegmentationResult:
    """Segment the idea into core facets with verbatim spans.

    Overlapping spans are resolved by keeping the earlier one and truncating
    the later; spans that cannot be anchored are dropped with a warning. If
    the model proposed segments and none survived anchoring, segmentation
    fails outright.
    """
    if not idea_text.strip():
        raise ValueError("idea text is empty")
    request = TaskRequest.for_template("segment_idea", {"idea_text": idea_text})
    response = gateway.execute(request)
    proposed = response.parsed["segments"]

    located: list[tuple[FacetType, tuple[int, int]]] = []
    dropped: list[str] = []
    cursor = 0
    for item in proposed:
        span = _locate(idea_text, item["text"], search_from=cursor)
        if span is None:
            dropped.append(item["text"])
            log.warning("segment text not found in idea, dropped: %.60r", item["text"])
            continue
        located.append((FacetType(item["facet_type"]), span))
        cursor = span[1]

    located.sort(key=lambda entry: entry[1])
    resolved: list[tuple[FacetType, tuple[int, int]]] = []
    previous_end = 0
    for facet_type, (start, end) in located:
        start = max(start, previous_end)
        if start >= end:
            dropped.append(f"({facet_type.value} span swallowed by an earlier segment)")
            continue
        resolved.append((facet_type, (start, end)))
        previous_end = end

    if proposed and not resolved:
        raise SegmentationError("no proposed segment could be located in the idea text")

    present = {facet_type for facet_type, _ in resolved}
    return SegmentationResult(
        segments=resolved,
        missing=set(CORE_FACETS) - present,
        dropped=dropped,
    )


def detect_missing_facets(doc) -> set[FacetType]:
    """Core facet types with no current segment. Pure function of the document."""
    present = {segment.facet_type for segment in doc.current_segments()}
    return set(CORE_FACETS) - present
