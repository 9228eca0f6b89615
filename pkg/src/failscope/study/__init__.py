"""Study harness: session service, durable persistence, HTTP API."""

from .models import (
    DECISIONS,
    PHASES,
    UNCERTAIN_POLICIES,
    ParticipantResponse,
    SessionScore,
    StudyConfig,
    StudyError,
    StudyQuestion,
    SubjectScore,
)
from .service import (
    DuplicateResponse,
    OutOfOrderResponse,
    SessionIncomplete,
    StudyService,
    SubmitAck,
    UnknownSession,
    UnknownStudy,
)

__all__ = [
    "DECISIONS",
    "PHASES",
    "UNCERTAIN_POLICIES",
    "ParticipantResponse",
    "SessionScore",
    "StudyConfig",
    "StudyError",
    "StudyQuestion",
    "SubjectScore",
    "DuplicateResponse",
    "OutOfOrderResponse",
    "SessionIncomplete",
    "StudyService",
    "SubmitAck",
    "UnknownSession",
    "UnknownStudy",
]
