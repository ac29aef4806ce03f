"""Idea document: facet segments, edit application with offset rebasing, staleness flags.

Offsets everywhere are Python ``str`` indices (Unicode code points), half-open
``[start, end)``. Documents are immutable snapshots: every mutation returns a
new ``IdeaDocument`` with the version bumped and an event appended, so
concurrent readers can hold old snapshots safely.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence


class FacetType(str, Enum):
    PROBLEM = "problem"
    CONTRIBUTION = "contribution"
    EVALUATION = "evaluation"


CORE_FACETS = frozenset(FacetType)


class SegmentStatus(str, Enum):
    CURRENT = "current"
    STALE = "stale"


class DocumentError(Exception):
    """Base for document mutation failures. The input document is never modified."""


class OutOfBoundsError(DocumentError):
    def __init__(self, start: int, end: int, length: int):
        self.start, self.end, self.length = start, end, length
        super().__init__(f"range [{start}, {end}) out of bounds for text of length {length}")


class SegmentOverlapError(DocumentError):
    """Carries the first violating pair of segment ids."""

    def __init__(self, first_id: str, second_id: str):
        self.violating_pair = (first_id, second_id)
        super().__init__(f"segments {first_id} and {second_id} overlap")


class UnknownSegmentError(DocumentError):
    def __init__(self, segment_id: str):
        self.segment_id = segment_id
        super().__init__(f"unknown segment id: {segment_id}")


def text_digest(text: str) -> str:
    """Digest used for segment content hashes (sha256, truncated)."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class FacetSegment:
    segment_id: str
    facet_type: FacetType
    start: int
    end: int
    content_hash: str
    status: SegmentStatus = SegmentStatus.CURRENT

    def covers(self, text: str) -> str:
        return text[self.start : self.end]

    def to_dict(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "facet_type": self.facet_type.value,
            "start": self.start,
            "end": self.end,
            "content_hash": self.content_hash,
            "status": self.status.value,
        }

    @staticmethod
    def from_dict(data: dict) -> "FacetSegment":
        return FacetSegment(
            segment_id=data["segment_id"],
            facet_type=FacetType(data["facet_type"]),
            start=data["start"],
            end=data["end"],
            content_hash=data["content_hash"],
            status=SegmentStatus(data["status"]),
        )


@dataclass(frozen=True)
class EditOperation:
    """Replace ``text[start:end]`` with ``replacement``. Range is into the pre-edit text."""

    start: int
    end: int
    replacement: str


@dataclass(frozen=True)
class IdeaDocument:
    doc_id: str
    text: str
    version: int
    segments: tuple[FacetSegment, ...]
    event_log: tuple[dict, ...]

    @staticmethod
    def create(doc_id: str, text: str) -> "IdeaDocument":
        event = {"seq": 0, "kind": "create", "text": text}
        return IdeaDocument(doc_id=doc_id, text=text, version=0, segments=(), event_log=(event,))

    def segment(self, segment_id: str) -> FacetSegment:
        for seg in self.segments:
            if seg.segment_id == segment_id:
                return seg
        raise UnknownSegmentError(segment_id)

    def segment_text(self, segment_id: str) -> str:
        return self.segment(segment_id).covers(self.text)

    def current_segments(self) -> tuple[FacetSegment, ...]:
        return tuple(s for s in self.segments if s.status is SegmentStatus.CURRENT)

    def _next(
        self, segments: Sequence[FacetSegment], event: dict, text: str | None = None
    ) -> "IdeaDocument":
        event = dict(event)
        event["seq"] = len(self.event_log)
        return replace(
            self,
            text=self.text if text is None else text,
            version=self.version + 1,
            segments=tuple(segments),
            event_log=self.event_log + (event,),
        )

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "text": self.text,
            "version": self.version,
            "segments": [s.to_dict() for s in self.segments],
            "event_log": list(self.event_log),
        }

    @staticmethod
    def from_dict(data: dict) -> "IdeaDocument":
        return IdeaDocument(
            doc_id=data["doc_id"],
            text=data["text"],
            version=data["version"],
            segments=tuple(FacetSegment.from_dict(s) for s in data["segments"]),
            event_log=tuple(data["event_log"]),
        )


def _rehash(segments: Iterable[FacetSegment], text: str) -> list[FacetSegment]:
    return [replace(s, content_hash=text_digest(s.covers(text))) for s in segments]


def apply_edit(doc: IdeaDocument, edit: EditOperation) -> IdeaDocument:
    """Apply an edit, rebasing segment offsets.

    Segments strictly before the edit are untouched; segments strictly after
    shift by the length delta. Segments overlapping the edit are resized to
    cover the replaced region; if one edit overlaps several segments they are
    coalesced into the earliest one (the edit glued them together), and any
    segment left empty is removed. Removed ids are reported in the edit record.
    """
    if not (0 <= edit.start <= edit.end <= len(doc.text)):
        raise OutOfBoundsError(edit.start, edit.end, len(doc.text))

    new_text = doc.text[: edit.start] + edit.replacement + doc.text[edit.end :]
    delta = len(edit.replacement) - (edit.end - edit.start)

    before: list[FacetSegment] = []
    overlapping: list[FacetSegment] = []
    after: list[FacetSegment] = []
    for seg in doc.segments:
        if seg.end <= edit.start:
            before.append(seg)
        elif seg.start >= edit.end:
            after.append(replace(seg, start=seg.start + delta, end=seg.end + delta))
        else:
            overlapping.append(seg)

    removed: list[str] = []
    merged: list[FacetSegment] = []
    if overlapping:
        new_start = min(overlapping[0].start, edit.start)
        new_end = max(overlapping[-1].end, edit.end) + delta
        if new_end > new_start:
            merged.append(replace(overlapping[0], start=new_start, end=new_end))
            removed.extend(s.segment_id for s in overlapping[1:])
        else:
            removed.extend(s.segment_id for s in overlapping)

    segments = _rehash(before + merged + after, new_text)
    event = {
        "kind": "edit",
        "start": edit.start,
        "end": edit.end,
        "replacement": edit.replacement,
        "removed_segments": removed,
    }
    return doc._next(segments, event, text=new_text)


def validate_segments(text: str, segments: Sequence[FacetSegment]) -> list[FacetSegment]:
    """Sort by start offset and enforce bounds, non-emptiness, and non-overlap.

    Returns the sorted list; raises with the first violation found.
    """
    for seg in segments:
        if not (0 <= seg.start < seg.end <= len(text)):
            raise OutOfBoundsError(seg.start, seg.end, len(text))
    ordered = sorted(segments, key=lambda s: (s.start, s.end, s.segment_id))
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start < prev.end:
            raise SegmentOverlapError(prev.segment_id, cur.segment_id)
    return ordered


def set_segments(doc: IdeaDocument, segments: Sequence[FacetSegment]) -> IdeaDocument:
    """Replace the segment list. All statuses reset to current; hashes recomputed."""
    ordered = validate_segments(doc.text, segments)
    fresh = [
        replace(s, status=SegmentStatus.CURRENT, content_hash=text_digest(s.covers(doc.text)))
        for s in ordered
    ]
    event = {
        "kind": "segments",
        "segments": [
            {"segment_id": s.segment_id, "facet_type": s.facet_type.value, "start": s.start, "end": s.end}
            for s in fresh
        ],
    }
    return doc._next(fresh, event)


def flag_segments(doc: IdeaDocument, segment_ids: Iterable[str], status: SegmentStatus) -> IdeaDocument:
    """Set the status of the listed segments. Unknown ids reject the whole call."""
    ids = set(segment_ids)
    known = {s.segment_id for s in doc.segments}
    for segment_id in sorted(ids):
        if segment_id not in known:
            raise UnknownSegmentError(segment_id)
    updated = [replace(s, status=status) if s.segment_id in ids else s for s in doc.segments]
    event = {"kind": "flag", "segment_ids": sorted(ids), "status": status.value}
    return doc._next(updated, event)


def replay_events(doc_id: str, events: Sequence[dict]) -> IdeaDocument:
    """Rebuild a document by replaying its event log from the create event."""
    if not events or events[0].get("kind") != "create":
        raise DocumentError("event log must start with a create event")
    doc = IdeaDocument.create(doc_id, events[0]["text"])
    for event in events[1:]:
        kind = event["kind"]
        if kind == "edit":
            doc = apply_edit(doc, EditOperation(event["start"], event["end"], event["replacement"]))
        elif kind == "segments":
            segs = [
                FacetSegment(
                    segment_id=s["segment_id"],
                    facet_type=FacetType(s["facet_type"]),
                    start=s["start"],
                    end=s["end"],
                    content_hash="",
                )
                for s in event["segments"]
            ]
            doc = set_segments(doc, segs)
        elif kind == "flag":
            doc = flag_segments(doc, event["segment_ids"], SegmentStatus(event["status"]))
        else:
            raise DocumentError(f"unknown event kind: {kind}")
    return doc


def check_invariants(doc: IdeaDocument) -> None:
    """Assert the document invariants; raises DocumentError on violation."""
    prev_end = None
    prev = None
    for seg in doc.segments:
        if not (0 <= seg.start < seg.end <= len(doc.text)):
            raise OutOfBoundsError(seg.start, seg.end, len(doc.text))
        if prev_end is not None and seg.start < prev_end:
            raise SegmentOverlapError(prev.segment_id, seg.segment_id)
        if seg.content_hash != text_digest(seg.covers(doc.text)):
            raise DocumentError(f"segment {seg.segment_id} hash out of sync with covered text")
        prev_end = seg.end
        prev = seg
