"""Domain types for the failure-anticipation study harness."""

from __future__ import annotations

from dataclasses import dataclass, field

DECISIONS = ("use_ai", "not_use_ai", "uncertain")
ACK_DECISION = "acknowledged"
PHASES = ("pretest", "teaching", "posttest")
UNCERTAIN_POLICIES = ("incorrect", "excluded")


class StudyError(ValueError):
    pass


@dataclass(frozen=True)
class StudyQuestion:
    id: str
    text: str
    choices: tuple[str, ...]
    subject: str
    llm_correct: bool
    matches_taught_pattern: bool
    guideline_index: int | None = None
    feedback: str | None = None

    def __post_init__(self):
        if not self.id:
            raise StudyError("question id must be non-empty")
        if not self.subject:
            raise StudyError(f"question {self.id!r} needs a subject")

    @property
    def expected_decision(self) -> str:
        """The answer counted as correct for this question."""
        if not self.matches_taught_pattern:
            return "uncertain"
        return "use_ai" if self.llm_correct else "not_use_ai"

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "choices": list(self.choices),
            "subject": self.subject,
            "llm_correct": self.llm_correct,
            "matches_taught_pattern": self.matches_taught_pattern,
            "guideline_index": self.guideline_index,
            "feedback": self.feedback,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "StudyQuestion":
        return cls(
            id=obj["id"],
            text=obj["text"],
            choices=tuple(obj.get("choices") or ()),
            subject=obj["subject"],
            llm_correct=bool(obj["llm_correct"]),
            matches_taught_pattern=bool(obj.get("matches_taught_pattern", True)),
            guideline_index=obj.get("guideline_index"),
            feedback=obj.get("feedback"),
        )


@dataclass(frozen=True)
class StudyConfig:
    study_id: str
    questions: tuple[StudyQuestion, ...]
    guidelines: tuple[str, ...]
    practice_questions: tuple[StudyQuestion, ...] = ()
    randomize_order: bool = True
    require_reasoning: bool = True

    def __post_init__(self):
        if not self.study_id:
            raise StudyError("study_id must be non-empty")
        if not self.questions:
            raise StudyError("a study needs at least one question")
        ids = [q.id for q in self.questions] + [q.id for q in self.practice_questions]
        if len(ids) != len(set(ids)):
            raise StudyError("question ids must be unique across test and practice questions")
        for q in (*self.questions, *self.practice_questions):
            if q.guideline_index is not None and not 0 <= q.guideline_index < len(self.guidelines):
                raise StudyError(f"question {q.id!r} references guideline {q.guideline_index}, "
                                 f"but only {len(self.guidelines)} exist")

    @property
    def no_match_question_ids(self) -> frozenset[str]:
        return frozenset(q.id for q in self.questions if not q.matches_taught_pattern)

    def question(self, question_id: str) -> StudyQuestion:
        for q in (*self.questions, *self.practice_questions):
            if q.id == question_id:
                return q
        raise StudyError(f"unknown question id {question_id!r}")

    def to_json_dict(self) -> dict:
        return {
            "study_id": self.study_id,
            "questions": [q.to_json_dict() for q in self.questions],
            "guidelines": list(self.guidelines),
            "practice_questions": [q.to_json_dict() for q in self.practice_questions],
            "randomize_order": self.randomize_order,
            "require_reasoning": self.require_reasoning,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "StudyConfig":
        return cls(
            study_id=obj["study_id"],
            questions=tuple(StudyQuestion.from_json_dict(q) for q in obj["questions"]),
            guidelines=tuple(obj.get("guidelines") or ()),
            practice_questions=tuple(
                StudyQuestion.from_json_dict(q) for q in obj.get("practice_questions") or ()
            ),
            randomize_order=bool(obj.get("randomize_order", True)),
            require_reasoning=bool(obj.get("require_reasoning", True)),
        )


@dataclass(frozen=True)
class ParticipantResponse:
    session_id: str
    question_id: str
    phase: str
    decision: str
    reasoning: str
    timestamp: float

    def __post_init__(self):
        if self.decision not in DECISIONS + (ACK_DECISION,):
            raise StudyError(f"unknown decision {self.decision!r}")
        if self.phase not in PHASES:
            raise StudyError(f"unknown phase {self.phase!r}")


@dataclass(frozen=True)
class SubjectScore:
    pre: float
    post: float

    @property
    def delta(self) -> float:
        return self.post - self.pre


@dataclass(frozen=True)
class SessionScore:
    session_id: str
    pretest_accuracy: float
    posttest_accuracy: float
    per_subject: dict[str, SubjectScore] = field(default_factory=dict)

    @property
    def delta(self) -> float:
        return self.posttest_accuracy - self.pretest_accuracy

    def to_json_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "pretest_accuracy": self.pretest_accuracy,
            "posttest_accuracy": self.posttest_accuracy,
            "delta": self.delta,
            "per_subject": {
                subject: {"pre": s.pre, "post": s.post, "delta": s.delta}
                for subject, s in sorted(self.per_subject.items())
            },
        }
