"""HTTP JSON API over the study service.

Routes (all bodies mirror the domain types; errors come back as
{"code": ..., "message": ...}):

  POST /studies                      create a study from a config document
  POST /studies/{id}/sessions       open a participant session
  GET  /sessions/{id}/next          currently served item
  POST /sessions/{id}/responses     answer / acknowledge the current item
  GET  /sessions/{id}/score         score a completed session
  GET  /studies/{id}/export         cohort export of completed sessions
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .models import StudyConfig, StudyError, UNCERTAIN_POLICIES
from .service import (
    DuplicateResponse,
    OutOfOrderResponse,
    SessionIncomplete,
    StudyService,
    UnknownSession,
    UnknownStudy,
)


class SessionCreateBody(BaseModel):
    participant_meta: dict = {}


class ResponseBody(BaseModel):
    question_id: str
    decision: str
    reasoning: str = ""


_STATUS = {
    UnknownStudy: 404,
    UnknownSession: 404,
    DuplicateResponse: 409,
    OutOfOrderResponse: 409,
    SessionIncomplete: 409,
    StudyError: 400,
}


def _error_response(exc: StudyError) -> JSONResponse:
    status = 400
    for cls, code in _STATUS.items():
        if type(exc) is cls:
            status = code
            break
    return JSONResponse(
        status_code=status,
        content={"code": type(exc).__name__, "message": str(exc)},
    )


def create_app(service: StudyService) -> FastAPI:
    app = FastAPI(title="failscope study service")

    @app.exception_handler(StudyError)
    async def study_error_handler(request: Request, exc: StudyError):
        return _error_response(exc)

    @app.post("/studies")
    def create_study(body: dict):
        config = StudyConfig.from_json_dict(body)
        return {"study_id": service.create_study(config)}

    @app.post("/studies/{study_id}/sessions")
    def create_session(study_id: str, body: SessionCreateBody | None = None):
        meta = body.participant_meta if body else {}
        return {"session_id": service.create_session(study_id, meta)}

    @app.get("/sessions/{session_id}/next")
    def next_item(session_id: str):
        phase, item, progress = service.next_item(session_id)
        return {"phase": phase, "item": item, "progress": progress}

    @app.post("/sessions/{session_id}/responses")
    def submit_response(session_id: str, body: ResponseBody):
        ack = service.submit_response(
            session_id,
            question_id=body.question_id,
            decision=body.decision,
            reasoning=body.reasoning,
        )
        return {"accepted": ack.accepted, "feedback": ack.feedback}

    @app.get("/sessions/{session_id}/score")
    def score_session(session_id: str, uncertain_policy: str = "incorrect"):
        if uncertain_policy not in UNCERTAIN_POLICIES:
            raise StudyError(f"uncertain_policy must be one of {UNCERTAIN_POLICIES}")
        return service.score_session(session_id, uncertain_policy).to_json_dict()

    @app.get("/studies/{study_id}/export")
    def export_cohort(study_id: str, uncertain_policy: str = "incorrect"):
        if uncertain_policy not in UNCERTAIN_POLICIES:
            raise StudyError(f"uncertain_policy must be one of {UNCERTAIN_POLICIES}")
        return service.export_cohort(study_id, uncertain_policy)

    return app


def serve(root: str, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Blocking uvicorn server over a fresh service rooted at `root`."""
    import uvicorn

    app = create_app(StudyService(root))
    uvicorn.run(app, host=host, port=port, log_level="warning")
