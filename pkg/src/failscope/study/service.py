"""Session lifecycle, durable persistence, and scoring for the study harness.

Every session lives under its own directory:

  sessions/<id>/meta.json       study id, participant metadata, item orderings
  sessions/<id>/responses.log   append-only JSONL, fsynced before each ack

A session's served-item sequence is a pure function of (config, recorded
orderings), and the cursor is the number of logged entries, so recovery is
"read meta, count log lines". Snapshots are not needed for correctness; a
checkpoint file is still written every few responses to make manual
inspection cheap.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from .models import (
    ACK_DECISION,
    DECISIONS,
    UNCERTAIN_POLICIES,
    ParticipantResponse,
    SessionScore,
    StudyConfig,
    StudyError,
    StudyQuestion,
    SubjectScore,
)

log = logging.getLogger(__name__)

SNAPSHOT_EVERY = 10


class UnknownStudy(StudyError):
    pass


class UnknownSession(StudyError):
    pass


class OutOfOrderResponse(StudyError):
    pass


class DuplicateResponse(StudyError):
    pass


class SessionIncomplete(StudyError):
    pass


@dataclass(frozen=True)
class SessionItem:
    phase: str  # pretest | teaching | posttest
    kind: str  # question | guideline | practice
    ref: str  # question id, or guideline item id like "guideline-0"

    def to_payload(self, config: StudyConfig) -> dict:
        """Client-facing payload. Never exposes ground-truth fields."""
        if self.kind == "guideline":
            index = int(self.ref.split("-", 1)[1])
            return {"kind": "guideline", "guideline_id": self.ref, "text": config.guidelines[index]}
        q = config.question(self.ref)
        return {
            "kind": self.kind,
            "question_id": q.id,
            "text": q.text,
            "choices": list(q.choices),
            "subject": q.subject,
        }


@dataclass(frozen=True)
class SubmitAck:
    accepted: bool
    feedback: dict | None


@dataclass
class _SessionState:
    session_id: str
    study_id: str
    participant_meta: dict
    orders: dict[str, list[str]]  # round name -> question id order
    responses: list[dict]


def _ordering(session_id: str, round_name: str, question_ids: list[str], randomize: bool) -> list[str]:
    if not randomize:
        return list(question_ids)
    rng = random.Random(f"{session_id}:{round_name}")
    out = list(question_ids)
    rng.shuffle(out)
    return out


def _atomic_write(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


class StudyService:
    """Many concurrent sessions; per-session writes are serialized."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "studies").mkdir(parents=True, exist_ok=True)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        self._registry_lock = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}
        self._studies: dict[str, StudyConfig] = {}
        self._sessions: dict[str, _SessionState] = {}
        self._recover()

    # ----- persistence -------------------------------------------------

    def _study_path(self, study_id: str) -> Path:
        return self.root / "studies" / f"{study_id}.json"

    def _session_dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def _recover(self) -> None:
        for path in sorted((self.root / "studies").glob("*.json")):
            config = StudyConfig.from_json_dict(json.loads(path.read_text(encoding="utf-8")))
            self._studies[config.study_id] = config
        for session_dir in sorted((self.root / "sessions").iterdir()):
            meta_path = session_dir / "meta.json"
            if not meta_path.exists():
                continue
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            responses = []
            log_path = session_dir / "responses.log"
            if log_path.exists():
                with open(log_path, "r", encoding="utf-8") as fh:
                    for line in fh:
                        if line.strip():
                            responses.append(json.loads(line))
            state = _SessionState(
                session_id=meta["session_id"],
                study_id=meta["study_id"],
                participant_meta=meta.get("participant_meta", {}),
                orders={k: list(v) for k, v in meta["orders"].items()},
                responses=responses,
            )
            self._sessions[state.session_id] = state
            self._session_locks[state.session_id] = threading.Lock()
        if self._sessions:
            log.info("recovered %d session(s), %d study config(s)", len(self._sessions), len(self._studies))

    def _append_response(self, state: _SessionState, record: dict) -> None:
        log_path = self._session_dir(state.session_id) / "responses.log"
        with open(log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        state.responses.append(record)
        if len(state.responses) % SNAPSHOT_EVERY == 0:
            _atomic_write(
                self._session_dir(state.session_id) / "snapshot.json",
                {"session_id": state.session_id, "n_responses": len(state.responses)},
            )

    # ----- studies ------------------------------------------------------

    def create_study(self, config: StudyConfig) -> str:
        with self._registry_lock:
            if config.study_id in self._studies:
                raise StudyError(f"study {config.study_id!r} already exists")
            _atomic_write(self._study_path(config.study_id), config.to_json_dict())
            self._studies[config.study_id] = config
        return config.study_id

    def get_study(self, study_id: str) -> StudyConfig:
        try:
            return self._studies[study_id]
        except KeyError:
            raise UnknownStudy(f"unknown study {study_id!r}") from None

    # ----- sessions -----------------------------------------------------

    def create_session(self, study_id: str, participant_meta: dict | None = None) -> str:
        config = self.get_study(study_id)
        session_id = uuid.uuid4().hex[:12]
        question_ids = [q.id for q in config.questions]
        practice_ids = [q.id for q in config.practice_questions]
        orders = {
            "pretest": _ordering(session_id, "pretest", question_ids, config.randomize_order),
            "practice": _ordering(session_id, "practice", practice_ids, config.randomize_order),
            "posttest": _ordering(session_id, "posttest", question_ids, config.randomize_order),
        }
        state = _SessionState(
            session_id=session_id,
            study_id=study_id,
            participant_meta=dict(participant_meta or {}),
            orders=orders,
            responses=[],
        )
        session_dir = self._session_dir(session_id)
        session_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(
            session_dir / "meta.json",
            {
                "session_id": session_id,
                "study_id": study_id,
                "participant_meta": state.participant_meta,
                "orders": orders,
            },
        )
        with self._registry_lock:
            self._sessions[session_id] = state
            self._session_locks[session_id] = threading.Lock()
        return session_id

    def _get_state(self, session_id: str) -> tuple[_SessionState, threading.Lock]:
        with self._registry_lock:
            state = self._sessions.get(session_id)
            lock = self._session_locks.get(session_id)
        if state is None or lock is None:
            raise UnknownSession(f"unknown session {session_id!r}")
        return state, lock

    def items_for(self, state: _SessionState) -> list[SessionItem]:
        """The full served-item sequence: a pure function of config + orders."""
        config = self.get_study(state.study_id)
        items = [SessionItem("pretest", "question", qid) for qid in state.orders["pretest"]]
        items += [SessionItem("teaching", "guideline", f"guideline-{i}") for i in range(len(config.guidelines))]
        items += [SessionItem("teaching", "practice", qid) for qid in state.orders["practice"]]
        items += [SessionItem("posttest", "question", qid) for qid in state.orders["posttest"]]
        return items

    def next_item(self, session_id: str) -> tuple[str, dict | None, dict]:
        """(phase, item payload or None when done, progress counters)."""
        state, lock = self._get_state(session_id)
        with lock:
            items = self.items_for(state)
            cursor = len(state.responses)
            progress = {"position": cursor, "total": len(items)}
            if cursor >= len(items):
                return "done", None, progress
            item = items[cursor]
            config = self.get_study(state.study_id)
            return item.phase, item.to_payload(config), progress

    def submit_response(
        self,
        session_id: str,
        question_id: str,
        decision: str,
        reasoning: str = "",
    ) -> SubmitAck:
        """Persist one response for the currently served item, then ack.

        The response is fsynced to the append-only log before the ack is
        produced, so an acknowledged response survives a hard kill.
        """
        state, lock = self._get_state(session_id)
        with lock:
            config = self.get_study(state.study_id)
            items = self.items_for(state)
            cursor = len(state.responses)
            if cursor >= len(items):
                raise OutOfOrderResponse("session is complete; no item to answer")
            current = items[cursor]
            if question_id != current.ref:
                for item in reversed(items[:cursor]):
                    if item.ref == question_id:
                        raise DuplicateResponse(
                            f"{question_id!r} was already answered in phase {item.phase!r}"
                        )
                raise OutOfOrderResponse(
                    f"expected a response for {current.ref!r}, got {question_id!r}"
                )
            if current.kind == "guideline":
                if decision != ACK_DECISION:
                    raise StudyError("guideline items take decision 'acknowledged'")
            else:
                if decision not in DECISIONS:
                    raise StudyError(f"decision must be one of {DECISIONS}, got {decision!r}")
                if config.require_reasoning and not reasoning.strip():
                    raise StudyError("reasoning is required for question responses")
            record = {
                "session_id": session_id,
                "question_id": question_id,
                "phase": current.phase,
                "kind": current.kind,
                "decision": decision,
                "reasoning": reasoning,
                "timestamp": time.time(),
            }
            self._append_response(state, record)
            feedback = None
            if current.kind == "practice":
                feedback = self._practice_feedback(config, config.question(question_id), decision)
            return SubmitAck(accepted=True, feedback=feedback)

    @staticmethod
    def _practice_feedback(config: StudyConfig, question: StudyQuestion, decision: str) -> dict:
        expected = question.expected_decision
        outcome = "correct" if decision == expected else "incorrect"
        guideline = (
            config.guidelines[question.guideline_index]
            if question.guideline_index is not None
            else None
        )
        if question.feedback:
            message = question.feedback
        elif outcome == "correct":
            message = "Correct."
        elif guideline is not None:
            message = f"Incorrect. Remember this guideline: {guideline}"
        else:
            message = "Incorrect. None of the taught guidelines applies to this question."
        return {"outcome": outcome, "expected": expected, "guideline": guideline, "message": message}

    # ----- scoring ------------------------------------------------------

    def is_complete(self, session_id: str) -> bool:
        state, lock = self._get_state(session_id)
        with lock:
            return len(state.responses) >= len(self.items_for(state))

    def responses(self, session_id: str) -> list[ParticipantResponse]:
        state, lock = self._get_state(session_id)
        with lock:
            records = list(state.responses)
        return [
            ParticipantResponse(
                session_id=r["session_id"],
                question_id=r["question_id"],
                phase=r["phase"],
                decision=r["decision"],
                reasoning=r["reasoning"],
                timestamp=r["timestamp"],
            )
            for r in records
            if r["kind"] != "guideline"
        ]

    def score_session(self, session_id: str, uncertain_policy: str = "incorrect") -> SessionScore:
        """Accuracy of failure anticipation per test phase, plus per-subject splits.

        A matched question is answered correctly by use_ai iff the model is
        right and by not_use_ai iff it is wrong; a no-match control is
        answered correctly by recognizing that nothing applies (uncertain).
        Under the 'excluded' policy, uncertain answers to matched questions
        drop out of the denominator instead of counting as wrong.
        """
        if uncertain_policy not in UNCERTAIN_POLICIES:
            raise StudyError(f"uncertain_policy must be one of {UNCERTAIN_POLICIES}")
        state, lock = self._get_state(session_id)
        with lock:
            config = self.get_study(state.study_id)
            if len(state.responses) < len(self.items_for(state)):
                raise SessionIncomplete(f"session {session_id!r} has unanswered items")
            records = list(state.responses)

        decisions: dict[tuple[str, str], str] = {}
        for r in records:
            if r["kind"] == "question":
                decisions[(r["phase"], r["question_id"])] = r["decision"]

        def accuracy(phase: str, questions) -> float:
            correct = counted = 0
            for q in questions:
                decision = decisions[(phase, q.id)]
                if q.matches_taught_pattern and decision == "uncertain":
                    if uncertain_policy == "excluded":
                        continue
                    counted += 1  # counted, never correct
                    continue
                counted += 1
                if decision == q.expected_decision:
                    correct += 1
            return correct / counted if counted else 0.0

        per_subject: dict[str, SubjectScore] = {}
        for subject in sorted({q.subject for q in config.questions}):
            qs = [q for q in config.questions if q.subject == subject]
            per_subject[subject] = SubjectScore(
                pre=accuracy("pretest", qs), post=accuracy("posttest", qs)
            )
        return SessionScore(
            session_id=session_id,
            pretest_accuracy=accuracy("pretest", config.questions),
            posttest_accuracy=accuracy("posttest", config.questions),
            per_subject=per_subject,
        )

    # ----- export -------------------------------------------------------

    def completed_sessions(self, study_id: str) -> list[str]:
        self.get_study(study_id)
        with self._registry_lock:
            candidates = [s for s in self._sessions.values() if s.study_id == study_id]
        return sorted(
            s.session_id for s in candidates if len(s.responses) >= len(self.items_for(s))
        )

    def export_cohort(self, study_id: str, uncertain_policy: str = "incorrect") -> dict:
        """Cohort rows for completed sessions plus a per-subject aggregate."""
        session_ids = self.completed_sessions(study_id)
        if not session_ids:
            raise StudyError(f"study {study_id!r} has no completed sessions to export")
        rows = []
        scores = []
        for session_id in session_ids:
            score = self.score_session(session_id, uncertain_policy)
            scores.append(score)
            state, _ = self._get_state(session_id)
            row = score.to_json_dict()
            row["participant_meta"] = state.participant_meta
            rows.append(row)

        subjects: dict[str, list[SubjectScore]] = {}
        for score in scores:
            for subject, s in score.per_subject.items():
                subjects.setdefault(subject, []).append(s)
        per_subject = [
            {
                "subject": subject,
                "pre": sum(s.pre for s in vals) / len(vals),
                "post": sum(s.post for s in vals) / len(vals),
                "delta": sum(s.delta for s in vals) / len(vals),
            }
            for subject, vals in sorted(subjects.items())
        ]
        return {"study_id": study_id, "uncertain_policy": uncertain_policy,
                "sessions": rows, "per_subject": per_subject}
