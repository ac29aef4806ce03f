"""HTTP surface over the session service.

One endpoint per user action. Mutating endpoints return the full session
snapshot so a client can re-render from the response alone.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .corpus import RetrievalError, UnknownPaperError, UnresolvablePaperError
from .document import DocumentError, FacetType, UnknownSegmentError
from .facets import SegmentationError
from .gateway import RetryExhaustedError
from .organizer import ClusteringError
from .pivot import GraphError, MissingFacetError
from .session import (
    AddPaperDisabledError,
    EmptySelectionError,
    NoAssessmentError,
    RewriteConflictError,
    RewriteStateError,
    SelectionError,
    SessionService,
    UnknownAssessmentError,
    UnknownSessionError,
)

ERROR_CODES: list[tuple[type[Exception], int]] = [
    (AddPaperDisabledError, 403),
    (UnknownSessionError, 404),
    (UnknownAssessmentError, 404),
    (UnknownSegmentError, 404),
    (UnknownPaperError, 404),
    (UnresolvablePaperError, 404),
    (EmptySelectionError, 409),
    (NoAssessmentError, 409),
    (RewriteConflictError, 409),
    (RewriteStateError, 409),
    (MissingFacetError, 409),
    (SelectionError, 400),
    (DocumentError, 400),
    (ValueError, 400),
    (RetryExhaustedError, 502),
    (GraphError, 502),
    (SegmentationError, 502),
    (RetrievalError, 502),
    (ClusteringError, 502),
]


class CreateSessionBody(BaseModel):
    idea_text: str


class EditBody(BaseModel):
    start: int
    end: int
    replacement: str


class SelectionBody(BaseModel):
    paper_ids: list[str]
    mode: str = "replace"


class AddPaperBody(BaseModel):
    paper_id: str


class AssessBody(BaseModel):
    segment_id: str
    selection: list[str] | None = None
    steering: str = ""


class AssessAllBody(BaseModel):
    selection: list[str] | None = None
    steering: str = ""


class RewriteBody(BaseModel):
    action: str
    edited_text: str | None = None


def _snapshot(service: SessionService, session_id: str) -> dict:
    return {"session": service.get_session(session_id).to_dict()}


def create_app(service: SessionService) -> FastAPI:
    app = FastAPI(title="litloop", docs_url=None, redoc_url=None)

    def _handler(status: int):
        def handle(request, exc):
            return JSONResponse(status_code=status, content={"detail": str(exc)})

        return handle

    for exc_type, status in ERROR_CODES:
        app.add_exception_handler(exc_type, _handler(status))

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = service.create_session(body.idea_text)
        return {"session": session.to_dict()}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _snapshot(service, session_id)

    @app.get("/sessions/{session_id}/status")
    def get_status(session_id: str):
        return service.status(session_id)

    @app.post("/sessions/{session_id}/edit")
    def apply_edit(session_id: str, body: EditBody):
        session = service.apply_edit(session_id, body.start, body.end, body.replacement)
        return {"session": session.to_dict()}

    @app.post("/sessions/{session_id}/segment")
    def resegment(session_id: str):
        session = service.resegment(session_id)
        return {"session": session.to_dict()}

    @app.post("/sessions/{session_id}/selection")
    def select_papers(session_id: str, body: SelectionBody):
        session = service.select_papers(session_id, body.paper_ids, body.mode)
        return {"session": session.to_dict()}

    @app.post("/sessions/{session_id}/papers")
    def add_paper(session_id: str, body: AddPaperBody):
        session, newly_added = service.add_paper(session_id, body.paper_id)
        return {"newly_added": newly_added, "session": session.to_dict()}

    @app.post("/sessions/{session_id}/facets/{facet}/rank")
    def rank_facet(session_id: str, facet: str):
        try:
            facet_type = FacetType(facet)
        except ValueError:
            return JSONResponse(
                status_code=404, content={"detail": f"unknown facet {facet!r}"}
            )
        starred = service.rank_facet(session_id, facet_type)
        return {"starred": starred, **_snapshot(service, session_id)}

    @app.post("/sessions/{session_id}/rerank")
    def rerank(session_id: str):
        session = service.rerank(session_id)
        return {"session": session.to_dict()}

    @app.post("/sessions/{session_id}/assess")
    def run_assessment(session_id: str, body: AssessBody):
        record = service.run_assessment(
            session_id, body.segment_id, body.selection, body.steering
        )
        return {
            "assessment": record.to_dict(),
            **_snapshot(service, session_id),
        }

    @app.post("/sessions/{session_id}/assess_all")
    def assess_all(session_id: str, body: AssessAllBody):
        result = service.assess_all(session_id, body.selection, body.steering)
        return {"result": result, **_snapshot(service, session_id)}

    @app.post("/sessions/{session_id}/assessments/{assessment_id}/rewrite")
    def rewrite(session_id: str, assessment_id: str, body: RewriteBody):
        record, affected = service.rewrite_action(
            session_id, assessment_id, body.action, body.edited_text
        )
        return {
            "assessment": record.to_dict(),
            "affected": sorted(affected),
            **_snapshot(service, session_id),
        }

    @app.get("/sessions/{session_id}/report")
    def export_report(session_id: str):
        return PlainTextResponse(service.export_report(session_id))

    return app
