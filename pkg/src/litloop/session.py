"""Session orchestration: one object per idea, every mutation event-sourced.

A session owns the idea document, the corpus, rankings, clusterings, the
current paper selection, and the assessment history. Each mutating operation
appends an event carrying enough payload to rebuild the resulting state
without touching a model or a scholarly backend; ``replay_session`` folds an
event log back into an identical session. Sessions persist to disk after
every mutation so an interactive run survives a process restart.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from . import document as docmod
from .config import AppConfig
from .corpus import CorpusBuilder, CorpusStore, RetrievalError
from .document import (
    EditOperation,
    FacetSegment,
    FacetType,
    IdeaDocument,
    SegmentStatus,
    UnknownSegmentError,
)
from .facets import (
    SegmentationError,
    detect_missing_facets,
    extract_paper_facets,
    segment_idea,
)
from .gateway import Gateway, RetryExhaustedError
from .organizer import (
    ClusteringError,
    FacetCluster,
    RelevanceRanking,
    classify_relevance,
    cluster_by_facet,
    order_corpus,
    rank_clusters,
    rerank,
)
from .pivot import (
    Assessment,
    GraphError,
    MissingFacetError,
    assess_contribution,
    assess_evaluation,
    assess_problem,
    detect_affected_facets,
    facet_text,
)

log = logging.getLogger(__name__)

SESSION_FORMAT = 1
FACET_ORDER = (FacetType.PROBLEM, FacetType.CONTRIBUTION, FacetType.EVALUATION)


class ServiceError(Exception):
    """Base class for request-level failures the API maps to status codes."""


class UnknownSessionError(ServiceError):
    def __init__(self, session_id: str):
        self.session_id = session_id
        super().__init__(f"no session {session_id!r}")


class UnknownAssessmentError(ServiceError):
    def __init__(self, assessment_id: str):
        self.assessment_id = assessment_id
        super().__init__(f"no assessment {assessment_id!r}")


class SelectionError(ServiceError):
    pass


class EmptySelectionError(ServiceError):
    pass


class AddPaperDisabledError(ServiceError):
    pass


class NoAssessmentError(ServiceError):
    pass


class RewriteConflictError(ServiceError):
    pass


class RewriteStateError(ServiceError):
    pass


def session_id_for(idea_text: str) -> str:
    return "s-" + hashlib.sha256(idea_text.encode("utf-8")).hexdigest()[:12]


@dataclass
class AssessmentRecord:
    assessment_id: str
    segment_id: str
    facet_type: FacetType
    segment_hash: str
    selection: list[str]
    assessment: Assessment
    status: str = "open"  # open | accepted | edited | rejected
    affected: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "assessment_id": self.assessment_id,
            "segment_id": self.segment_id,
            "facet_type": self.facet_type.value,
            "segment_hash": self.segment_hash,
            "selection": list(self.selection),
            "assessment": self.assessment.to_dict(),
            "status": self.status,
            "affected": list(self.affected),
        }

    @staticmethod
    def from_dict(data: dict) -> "AssessmentRecord":
        return AssessmentRecord(
            assessment_id=data["assessment_id"],
            segment_id=data["segment_id"],
            facet_type=FacetType(data["facet_type"]),
            segment_hash=data["segment_hash"],
            selection=list(data["selection"]),
            assessment=Assessment.from_dict(data["assessment"]),
            status=data["status"],
            affected=list(data["affected"]),
        )


@dataclass
class Session:
    session_id: str
    doc: IdeaDocument
    store: CorpusStore = field(default_factory=CorpusStore)
    ranking: RelevanceRanking = field(default_factory=RelevanceRanking)
    clusterings: dict[FacetType, list[FacetCluster]] = field(default_factory=dict)
    starred: dict[FacetType, list[str]] = field(default_factory=dict)
    selection: list[str] = field(default_factory=list)
    assessments: list[AssessmentRecord] = field(default_factory=list)
    rewrite_log: list[dict] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    event_log: list[dict] = field(default_factory=list)
    phase: str = "created"
    phase_history: list[str] = field(default_factory=list)

    def record(self, assessment_id: str) -> AssessmentRecord:
        for record in self.assessments:
            if record.assessment_id == assessment_id:
                return record
        raise UnknownAssessmentError(assessment_id)

    def to_dict(self) -> dict:
        return {
            "format": SESSION_FORMAT,
            "session_id": self.session_id,
            "doc": self.doc.to_dict(),
            "store": self.store.to_dict(),
            "ranking": self.ranking.to_dict(),
            "clusterings": {
                facet.value: [c.to_dict() for c in clusters]
                for facet, clusters in sorted(
                    self.clusterings.items(), key=lambda kv: kv[0].value
                )
            },
            "starred": {
                facet.value: list(ids)
                for facet, ids in sorted(
                    self.starred.items(), key=lambda kv: kv[0].value
                )
            },
            "selection": list(self.selection),
            "assessments": [r.to_dict() for r in self.assessments],
            "rewrite_log": list(self.rewrite_log),
            "errors": list(self.errors),
            "event_log": list(self.event_log),
            "phase": self.phase,
            "phase_history": list(self.phase_history),
        }

    @staticmethod
    def from_dict(data: dict) -> "Session":
        if data.get("format") != SESSION_FORMAT:
            raise ServiceError(f"unsupported session format: {data.get('format')!r}")
        return Session(
            session_id=data["session_id"],
            doc=IdeaDocument.from_dict(data["doc"]),
            store=CorpusStore.from_dict(data["store"]),
            ranking=RelevanceRanking.from_dict(data["ranking"]),
            clusterings={
                FacetType(facet): [FacetCluster.from_dict(c) for c in clusters]
                for facet, clusters in data["clusterings"].items()
            },
            starred={
                FacetType(facet): list(ids) for facet, ids in data["starred"].items()
            },
            selection=list(data["selection"]),
            assessments=[AssessmentRecord.from_dict(r) for r in data["assessments"]],
            rewrite_log=list(data["rewrite_log"]),
            errors=list(data["errors"]),
            event_log=list(data["event_log"]),
            phase=data["phase"],
            phase_history=list(data["phase_history"]),
        )


def _dedupe(ids) -> list[str]:
    seen: list[str] = []
    for paper_id in ids:
        if paper_id not in seen:
            seen.append(paper_id)
    return seen


class SessionService:
    """All user-facing operations, serialized per session.

    The gateway and scholarly backend are injected so the whole service runs
    deterministically under a mock script and a recorded backend.
    """

    def __init__(
        self,
        gateway: Gateway,
        backend,
        config: AppConfig | None = None,
        store_dir: str | Path | None = None,
    ):
        self.gateway = gateway
        self.config = config or AppConfig()
        cache_dir = Path(self.config.cache_dir) if self.config.cache_dir else None
        self.builder = CorpusBuilder(
            backend, cache_dir=cache_dir, seed_cap=self.config.corpus_cap
        )
        store_dir = store_dir or self.config.data_dir
        self.store_dir = Path(store_dir) if store_dir else None
        if self.store_dir:
            self.store_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._registry_lock = threading.Lock()

    # -- bookkeeping --------------------------------------------------------

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks[session_id]

    def _event(self, session: Session, kind: str, **payload) -> dict:
        event = {"seq": len(session.event_log), "kind": kind, **payload}
        session.event_log.append(event)
        return event

    def _persist(self, session: Session) -> None:
        if not self.store_dir:
            return
        path = self.store_dir / f"{session.session_id}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(session.to_dict(), sort_keys=True, indent=2))
        os.replace(tmp, path)

    def _set_phase(self, session: Session, phase: str) -> None:
        session.phase = phase
        session.phase_history.append(phase)
        self._event(session, "phase", phase=phase)
        self._persist(session)

    def _note_error(self, session: Session, message: str) -> None:
        session.errors.append(message)
        self._event(session, "error", message=message)
        log.warning("session %s: %s", session.session_id, message)

    def _corpus_snapshot(self, session: Session) -> dict:
        return {
            "store": session.store.to_dict(),
            "ranking": session.ranking.to_dict(),
            "clusterings": {
                facet.value: [c.to_dict() for c in clusters]
                for facet, clusters in session.clusterings.items()
            },
            "starred": {
                facet.value: list(ids) for facet, ids in session.starred.items()
            },
        }

    # -- session lifecycle ----------------------------------------------------

    def create_session(self, idea_text: str) -> Session:
        if not idea_text or not idea_text.strip():
            raise ValueError("idea text must not be empty")
        session_id = session_id_for(idea_text)
        with self._registry_lock:
            existing = self._sessions.get(session_id)
            if existing is None and self.store_dir:
                path = self.store_dir / f"{session_id}.json"
                if path.exists():
                    existing = Session.from_dict(json.loads(path.read_text()))
                    self._sessions[session_id] = existing
            if existing is not None:
                return existing
            session = Session(
                session_id=session_id,
                doc=IdeaDocument.create(f"{session_id}-doc", idea_text),
            )
            self._sessions[session_id] = session
        with self._lock_for(session_id):
            self._event(session, "create", idea_text=idea_text)
            self._bootstrap(session)
            return session

    def _bootstrap(self, session: Session) -> None:
        idea_text = session.doc.text
        self._set_phase(session, "segmenting")
        try:
            result = segment_idea(idea_text, self.gateway)
            session.doc = docmod.set_segments(session.doc, result.to_facet_segments())
            self._event(
                session,
                "segmented",
                segments=[
                    {
                        "segment_id": s.segment_id,
                        "facet_type": s.facet_type.value,
                        "start": s.start,
                        "end": s.end,
                    }
                    for s in session.doc.segments
                ],
                missing=sorted(f.value for f in result.missing),
                dropped=list(result.dropped),
            )
        except (SegmentationError, RetryExhaustedError) as exc:
            self._note_error(session, f"segmentation failed: {exc}")

        self._set_phase(session, "retrieving")
        try:
            self.builder.retrieve_seed(session.store, idea_text)
        except RetrievalError as exc:
            self._note_error(
                session,
                f"literature retrieval failed: {exc}. The corpus is empty; "
                "retry later or add papers by id.",
            )
            self._set_phase(session, "ready")
            return

        self._set_phase(session, "fetching")
        for paper_id in list(session.store.papers):
            self.builder.fetch_fulltext(session.store, paper_id)

        self._set_phase(session, "extracting")
        for paper_id in list(session.store.papers):
            extract_paper_facets(session.store.get(paper_id), self.gateway)

        self._set_phase(session, "expanding")
        self.builder.expand_citations(session.store)

        self._set_phase(session, "classifying")
        for paper in session.store.papers.values():
            classify_relevance(paper, idea_text, self.gateway)
        session.ranking = order_corpus(session.store)

        self._set_phase(session, "clustering")
        self._recluster(session)
        self._event(session, "corpus", **self._corpus_snapshot(session))
        self._set_phase(session, "ready")

    def _recluster(self, session: Session) -> None:
        for facet in FACET_ORDER:
            try:
                session.clusterings[facet] = cluster_by_facet(
                    session.store, facet, self.gateway
                )
                session.starred[facet] = []
            except ClusteringError as exc:
                # Keep whatever clustering the session already had.
                self._note_error(session, str(exc))
                session.clusterings.setdefault(facet, [])
                session.starred.setdefault(facet, [])

    def get_session(self, session_id: str) -> Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
            if session is None and self.store_dir:
                path = self.store_dir / f"{session_id}.json"
                if path.exists():
                    session = Session.from_dict(json.loads(path.read_text()))
                    self._sessions[session_id] = session
            if session is None:
                raise UnknownSessionError(session_id)
            return session

    def status(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        return {
            "session_id": session.session_id,
            "phase": session.phase,
            "phase_history": list(session.phase_history),
            "segments": len(session.doc.segments),
            "papers": len(session.store),
            "selected": len(session.selection),
            "assessments": len(session.assessments),
            "errors": len(session.errors),
        }

    # -- document operations ----------------------------------------------------

    def apply_edit(
        self, session_id: str, start: int, end: int, replacement: str
    ) -> Session:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            session.doc = docmod.apply_edit(
                session.doc, EditOperation(start, end, replacement)
            )
            self._event(
                session, "edit", start=start, end=end, replacement=replacement
            )
            self._persist(session)
            return session

    def resegment(self, session_id: str) -> Session:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            result = segment_idea(session.doc.text, self.gateway)
            session.doc = docmod.set_segments(session.doc, result.to_facet_segments())
            self._event(
                session,
                "resegment",
                segments=[
                    {
                        "segment_id": s.segment_id,
                        "facet_type": s.facet_type.value,
                        "start": s.start,
                        "end": s.end,
                    }
                    for s in session.doc.segments
                ],
                missing=sorted(f.value for f in result.missing),
                dropped=list(result.dropped),
            )
            self._persist(session)
            return session

    # -- corpus operations --------------------------------------------------------

    def select_papers(
        self, session_id: str, paper_ids: list[str], mode: str = "replace"
    ) -> Session:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._apply_selection(session, paper_ids, mode)
            self._persist(session)
            return session

    def _apply_selection(
        self, session: Session, paper_ids: list[str], mode: str = "replace"
    ) -> None:
        unknown = sorted(set(paper_ids) - set(session.store.papers))
        if unknown:
            raise SelectionError(f"papers not in the corpus: {unknown}")
        if mode == "replace":
            selection = _dedupe(paper_ids)
        elif mode == "add":
            selection = _dedupe(list(session.selection) + list(paper_ids))
        elif mode == "remove":
            removed = set(paper_ids)
            selection = [p for p in session.selection if p not in removed]
        else:
            raise SelectionError(f"unknown selection mode {mode!r}")
        session.selection = selection
        self._event(session, "select", paper_ids=list(selection), mode=mode)

    def add_paper(self, session_id: str, paper_id: str) -> tuple[Session, bool]:
        if not self.config.allow_add_paper:
            raise AddPaperDisabledError("adding papers is disabled by configuration")
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            record, newly_added = self.builder.add_paper(session.store, paper_id)
            if newly_added:
                self.builder.fetch_fulltext(session.store, paper_id)
                extract_paper_facets(record, self.gateway)
                self.builder.expand_citations(session.store)
                for paper in session.store.papers.values():
                    if paper.relevance is None:
                        classify_relevance(paper, session.doc.text, self.gateway)
                session.ranking = order_corpus(session.store)
                self._recluster(session)
            self._event(
                session,
                "add_paper",
                paper_id=paper_id,
                newly_added=newly_added,
                **self._corpus_snapshot(session),
            )
            self._persist(session)
            return session, newly_added

    def rank_facet(self, session_id: str, facet: FacetType) -> list[str]:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            clusters = session.clusterings.get(facet) or []
            if not clusters:
                raise SelectionError(
                    f"no clusters exist for the {facet.value} facet yet"
                )
            text = facet_text(session.doc, facet)
            if text is None:
                raise MissingFacetError(facet, needed_for=facet)
            starred = rank_clusters(text, clusters, self.gateway)
            session.starred[facet] = list(starred)
            self._event(
                session,
                "rank",
                facet=facet.value,
                starred=list(starred),
            )
            self._persist(session)
            return starred

    def rerank(self, session_id: str) -> Session:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            result = rerank(session.store, session.doc.text, self.gateway)
            session.ranking = result.ranking
            for facet, clusters in result.clusterings.items():
                session.clusterings[facet] = clusters
                session.starred[facet] = []
            session.errors.extend(result.errors)
            self._event(
                session,
                "rerank",
                errors=list(result.errors),
                **self._corpus_snapshot(session),
            )
            self._persist(session)
            return session

    # -- assessments -----------------------------------------------------------------

    def run_assessment(
        self,
        session_id: str,
        segment_id: str,
        selection: list[str] | None = None,
        steering: str = "",
    ) -> AssessmentRecord:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            if selection is not None:
                self._apply_selection(session, selection, "replace")
            if not session.selection:
                raise EmptySelectionError(
                    "no papers are selected; select at least one paper, then assess"
                )
            record = self._assess_segment(session, segment_id, steering)
            self._persist(session)
            return record

    def _assess_segment(
        self, session: Session, segment_id: str, steering: str
    ) -> AssessmentRecord:
        doc = session.doc
        segment = doc.segment(segment_id)  # raises UnknownSegmentError
        text = segment.covers(doc.text)
        problem = facet_text(doc, FacetType.PROBLEM)
        contribution = facet_text(doc, FacetType.CONTRIBUTION)
        if segment.facet_type is FacetType.PROBLEM:
            assessment = assess_problem(
                text, session.store, session.selection, self.gateway, steering
            )
        elif segment.facet_type is FacetType.CONTRIBUTION:
            assessment = assess_contribution(
                text,
                problem or "",
                session.store,
                session.selection,
                self.gateway,
                steering,
            )
        else:
            assessment = assess_evaluation(
                text,
                problem,
                contribution,
                session.store,
                session.selection,
                self.gateway,
                steering,
            )
        affected = detect_affected_facets(
            session.doc, segment_id, assessment.verdict_summary, self.gateway
        )
        if affected:
            session.doc = docmod.flag_segments(
                session.doc, affected, SegmentStatus.STALE
            )
        record = AssessmentRecord(
            assessment_id=f"a{len(session.assessments) + 1}",
            segment_id=segment_id,
            facet_type=segment.facet_type,
            segment_hash=segment.content_hash,
            selection=list(session.selection),
            assessment=assessment,
            affected=sorted(affected),
        )
        session.assessments.append(record)
        self._event(session, "assess", record=record.to_dict())
        return record

    def assess_all(
        self,
        session_id: str,
        selection: list[str] | None = None,
        steering: str = "",
    ) -> dict:
        """Assess each core facet that has a segment; failures are isolated."""
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            if selection is not None:
                self._apply_selection(session, selection, "replace")
            if not session.selection:
                raise EmptySelectionError(
                    "no papers are selected; select at least one paper, then assess"
                )
            # Targets and the missing set are fixed up front: an assessment in
            # this loop may flag a later segment stale, and that segment must
            # still be assessed (it was current when the run started).
            targets: dict[FacetType, str] = {}
            for segment in session.doc.current_segments():
                targets.setdefault(segment.facet_type, segment.segment_id)
            missing = detect_missing_facets(session.doc)
            records: dict[str, str] = {}
            for facet in FACET_ORDER:
                if facet not in targets:
                    continue
                try:
                    record = self._assess_segment(session, targets[facet], steering)
                    records[facet.value] = record.assessment_id
                except (RetryExhaustedError, GraphError, MissingFacetError) as exc:
                    self._note_error(session, f"{facet.value} assessment failed: {exc}")
            self._persist(session)
            return {
                "assessed": records,
                "missing": sorted(f.value for f in missing),
            }

    # -- rewrites ---------------------------------------------------------------------

    def rewrite_action(
        self,
        session_id: str,
        assessment_id: str,
        action: str,
        edited_text: str | None = None,
    ) -> tuple[AssessmentRecord, set[str]]:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            record = session.record(assessment_id)
            if record.status != "open":
                raise RewriteStateError(
                    f"assessment {assessment_id} was already {record.status}"
                )
            if action == "reject":
                record.status = "rejected"
                note = "rewrite rejected; document unchanged"
                session.rewrite_log.append(
                    {"assessment_id": assessment_id, "action": action, "note": note}
                )
                self._event(
                    session, "rewrite", assessment_id=assessment_id, action=action,
                    note=note,
                )
                self._persist(session)
                return record, set()
            if action == "accept":
                replacement = record.assessment.suggested_rewrite
                note = "rewrite accepted verbatim"
            elif action == "edit":
                if not edited_text or not edited_text.strip():
                    raise ValueError("action 'edit' requires non-empty edited_text")
                replacement = edited_text
                note = "partially incorporated: rewrite applied with user edits"
            else:
                raise ValueError(f"unknown rewrite action {action!r}")
            try:
                segment = session.doc.segment(record.segment_id)
            except UnknownSegmentError:
                raise RewriteConflictError(
                    f"segment {record.segment_id} no longer exists; "
                    "re-run the assessment on the current idea"
                ) from None
            if segment.content_hash != record.segment_hash:
                raise RewriteConflictError(
                    "the facet text changed after this assessment; "
                    "re-run the assessment on the current text"
                )
            start, end = segment.start, segment.end
            session.doc = docmod.apply_edit(
                session.doc, EditOperation(start, end, replacement)
            )
            affected = detect_affected_facets(
                session.doc,
                record.segment_id,
                record.assessment.verdict_summary,
                self.gateway,
            )
            if affected:
                session.doc = docmod.flag_segments(
                    session.doc, affected, SegmentStatus.STALE
                )
            record.status = "accepted" if action == "accept" else "edited"
            session.rewrite_log.append(
                {"assessment_id": assessment_id, "action": action, "note": note}
            )
            self._event(
                session,
                "rewrite",
                assessment_id=assessment_id,
                action=action,
                start=start,
                end=end,
                replacement=replacement,
                affected=sorted(affected),
                note=note,
            )
            self._persist(session)
            return record, affected

    # -- export -----------------------------------------------------------------------

    def export_report(self, session_id: str) -> str:
        from .report import render_report

        with self._lock_for(session_id):
            session = self.get_session(session_id)
            if not session.assessments:
                raise NoAssessmentError(
                    "run at least one assessment before exporting a report"
                )
            return render_report(session)


# -- replay ---------------------------------------------------------------------------


def replay_session(events: list[dict]) -> Session:
    """Rebuild a session by folding its event log. No model or backend calls."""
    if not events or events[0].get("kind") != "create":
        raise ServiceError("event log must start with a create event")
    idea_text = events[0]["idea_text"]
    session_id = session_id_for(idea_text)
    session = Session(
        session_id=session_id,
        doc=IdeaDocument.create(f"{session_id}-doc", idea_text),
    )
    for event in events:
        kind = event["kind"]
        session.event_log.append(dict(event))
        if kind == "create":
            continue
        if kind == "phase":
            session.phase = event["phase"]
            session.phase_history.append(event["phase"])
        elif kind == "error":
            session.errors.append(event["message"])
        elif kind in ("segmented", "resegment"):
            segments = [
                FacetSegment(
                    segment_id=s["segment_id"],
                    facet_type=FacetType(s["facet_type"]),
                    start=s["start"],
                    end=s["end"],
                    content_hash="",
                )
                for s in event["segments"]
            ]
            session.doc = docmod.set_segments(session.doc, segments)
        elif kind in ("corpus", "add_paper", "rerank"):
            session.store = CorpusStore.from_dict(event["store"])
            session.ranking = RelevanceRanking.from_dict(event["ranking"])
            session.clusterings = {
                FacetType(facet): [FacetCluster.from_dict(c) for c in clusters]
                for facet, clusters in event["clusterings"].items()
            }
            session.starred = {
                FacetType(facet): list(ids)
                for facet, ids in event["starred"].items()
            }
            if kind == "rerank":
                session.errors.extend(event["errors"])
        elif kind == "edit":
            session.doc = docmod.apply_edit(
                session.doc,
                EditOperation(event["start"], event["end"], event["replacement"]),
            )
        elif kind == "select":
            session.selection = list(event["paper_ids"])
        elif kind == "rank":
            facet = FacetType(event["facet"])
            starred = list(event["starred"])
            session.starred[facet] = starred
            for cluster in session.clusterings.get(facet, []):
                cluster.starred = cluster.cluster_id in starred
        elif kind == "assess":
            record = AssessmentRecord.from_dict(event["record"])
            if record.affected:
                session.doc = docmod.flag_segments(
                    session.doc, record.affected, SegmentStatus.STALE
                )
            session.assessments.append(record)
        elif kind == "rewrite":
            record = session.record(event["assessment_id"])
            action = event["action"]
            if action == "reject":
                record.status = "rejected"
            else:
                session.doc = docmod.apply_edit(
                    session.doc,
                    EditOperation(
                        event["start"], event["end"], event["replacement"]
                    ),
                )
                if event["affected"]:
                    session.doc = docmod.flag_segments(
                        session.doc, event["affected"], SegmentStatus.STALE
                    )
                record.status = "accepted" if action == "accept" else "edited"
            session.rewrite_log.append(
                {
                    "assessment_id": event["assessment_id"],
                    "action": action,
                    "note": event["note"],
                }
            )
        else:
            raise ServiceError(f"unknown event kind {kind!r} at seq {event['seq']}")
    return session
