"""Durable, resumable state for selection runs.

A session directory holds `session.json` (the checkpointed state machine),
`audit.jsonl` (one line per selection round), `cache/` (the response cache),
and `exemplars.json` once the run completes. Checkpoints are written
temp-then-rename with an embedded content hash, so a torn write is detected
at load instead of silently resuming from garbage.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from .cache import ResponseCache
from .domain import (
    DomainError,
    ExemplarSet,
    NormalizedAnswer,
    PoolRole,
    Question,
    QuestionPool,
    SessionConfig,
    dump_json,
    exemplar_set_to_file_dict,
)
from .uncertainty import UncertaintyReport

SESSION_FILE_VERSION = 1

SESSION_FILE = "session.json"
AUDIT_FILE = "audit.jsonl"
EXEMPLAR_FILE = "exemplars.json"
CACHE_DIR = "cache"


class SessionError(DomainError):
    pass


class UnknownSession(SessionError):
    """No session exists at the requested location."""


class CorruptCheckpoint(SessionError):
    """The session file failed parsing or its content hash check."""


class SessionStatus(str, Enum):
    AWAITING_SCORES = "awaiting_scores"
    AWAITING_ANNOTATION = "awaiting_annotation"
    COMPLETE = "complete"
    ABORTED = "aborted"


@dataclass(frozen=True, slots=True)
class RoundRecord:
    """Audit of one selection round: who was scored, who won, and why."""

    round: int
    scored: tuple[tuple[str, float, float], ...]  # (question_id, disagreement, entropy)
    selected_id: str
    tie_break_applied: bool

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "round": self.round,
            "scored": [[qid, d, e] for qid, d, e in self.scored],
            "selected_id": self.selected_id,
            "tie_break_applied": self.tie_break_applied,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "RoundRecord":
        return cls(
            round=int(data["round"]),
            scored=tuple((str(q), float(d), float(e)) for q, d, e in data["scored"]),
            selected_id=str(data["selected_id"]),
            tie_break_applied=bool(data["tie_break_applied"]),
        )


@dataclass(frozen=True, slots=True)
class AnnotationRequest:
    """What the annotator sees: the chosen question plus its score evidence."""

    round: int
    question: Question
    report: Optional[UncertaintyReport] = None

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "round": self.round,
            "question": self.question.to_json_dict(),
            "report": self.report.to_json_dict() if self.report else None,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "AnnotationRequest":
        report = data.get("report")
        return cls(
            round=int(data["round"]),
            question=Question.from_json_dict(data["question"]),
            report=UncertaintyReport.from_json_dict(report) if report else None,
        )


@dataclass(frozen=True, slots=True)
class AnnotationReply:
    """The human's (or stub's) reasoning chain and final answer."""

    rationale: str
    answer: NormalizedAnswer
    annotator_id: str

    def validate_for(self, question: Question) -> None:
        if not self.rationale.strip():
            raise DomainError("annotation rationale must be non-empty")
        if not self.answer.valid:
            raise DomainError("annotation answer is unparseable")
        if self.answer.kind is not question.kind:
            raise DomainError("annotation answer kind does not match the question")
        if not self.annotator_id:
            raise DomainError("annotator_id must be non-empty")


@dataclass
class SelectionSession:
    """Mutable state of one selection run; persisted after every transition."""

    id: str
    dataset: str
    config: SessionConfig
    pool_snapshot: QuestionPool
    exemplar_set: ExemplarSet
    round_records: list[RoundRecord] = field(default_factory=list)
    status: SessionStatus = SessionStatus.AWAITING_SCORES
    pending: Optional[AnnotationRequest] = None

    def __post_init__(self) -> None:
        self.check_invariants()

    def check_invariants(self) -> None:
        if (self.status is SessionStatus.AWAITING_ANNOTATION) != (self.pending is not None):
            raise SessionError("pending request present iff awaiting annotation")
        expected = len(self.exemplar_set) + (
            1 if self.status is SessionStatus.AWAITING_ANNOTATION else 0
        )
        if len(self.round_records) != expected:
            raise SessionError(
                f"round record count {len(self.round_records)} != expected {expected}"
            )

    def remaining_questions(self) -> list[Question]:
        taken = self.exemplar_set.question_ids()
        return [q for q in self.pool_snapshot.questions if q.id not in taken]

    def current_round(self) -> int:
        if self.status is SessionStatus.COMPLETE:
            return self.config.budget_k
        return len(self.exemplar_set) + 1

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "dataset": self.dataset,
            "config": self.config.to_json_dict(),
            "status": self.status.value,
            "pool_role": self.pool_snapshot.role.value,
            "pool": [q.to_json_dict() for q in self.pool_snapshot.questions],
            "exemplars": [e.to_json_dict() for e in self.exemplar_set.exemplars],
            "round_records": [r.to_json_dict() for r in self.round_records],
            "pending": self.pending.to_json_dict() if self.pending else None,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "SelectionSession":
        from .domain import Exemplar  # local import keeps module top uncluttered

        config = SessionConfig.from_json_dict(data["config"])
        pool = QuestionPool(
            tuple(Question.from_json_dict(q) for q in data["pool"]),
            PoolRole(data["pool_role"]),
        )
        exemplars = tuple(Exemplar.from_json_dict(e) for e in data["exemplars"])
        pending = data.get("pending")
        return cls(
            id=str(data["id"]),
            dataset=str(data["dataset"]),
            config=config,
            pool_snapshot=pool,
            exemplar_set=ExemplarSet(exemplars, config.budget_k),
            round_records=[RoundRecord.from_json_dict(r) for r in data["round_records"]],
            status=SessionStatus(data["status"]),
            pending=AnnotationRequest.from_json_dict(pending) if pending else None,
        )


# ---------------------------------------------------------------------------
# Session directory store


class SessionStore:
    """Owns one session directory: checkpoints, audit log, cache, exports."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    @property
    def session_path(self) -> Path:
        return self.directory / SESSION_FILE

    @property
    def audit_path(self) -> Path:
        return self.directory / AUDIT_FILE

    @property
    def exemplar_path(self) -> Path:
        return self.directory / EXEMPLAR_FILE

    def exists(self) -> bool:
        return self.session_path.exists()

    def cache(self) -> ResponseCache:
        return ResponseCache(self.directory / CACHE_DIR)

    def checkpoint(self, session: SelectionSession) -> None:
        """Atomically persist the session state and rebuild the audit log."""
        session.check_invariants()
        self.directory.mkdir(parents=True, exist_ok=True)
        body = session.to_json_dict()
        canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
        digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
        envelope = {"version": SESSION_FILE_VERSION, "sha256": digest, "body": body}
        self._atomic_write(self.session_path, dump_json(envelope))
        audit_lines = "".join(
            json.dumps(record.to_json_dict(), ensure_ascii=False) + "\n"
            for record in session.round_records
        )
        self._atomic_write(self.audit_path, audit_lines)

    def load(self) -> SelectionSession:
        if not self.session_path.exists():
            raise UnknownSession(f"no session at {self.directory}")
        try:
            envelope = json.loads(self.session_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CorruptCheckpoint(f"session file is not valid JSON: {exc}") from exc
        if not isinstance(envelope, dict) or envelope.get("version") != SESSION_FILE_VERSION:
            raise CorruptCheckpoint("unsupported or missing session file version")
        body = envelope.get("body")
        canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
        digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
        if digest != envelope.get("sha256"):
            raise CorruptCheckpoint("session file content hash mismatch")
        try:
            return SelectionSession.from_json_dict(body)
        except (KeyError, ValueError, TypeError, DomainError) as exc:
            raise CorruptCheckpoint(f"session body malformed: {exc}") from exc

    def write_exemplar_file(self, session: SelectionSession, strategy_label: str) -> None:
        payload = dump_json(
            exemplar_set_to_file_dict(session.exemplar_set, session.dataset, strategy_label)
        )
        self._atomic_write(self.exemplar_path, payload)

    @staticmethod
    def _atomic_write(path: Path, content: str) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(content, encoding="utf-8")
        os.replace(tmp, path)


def load_session(directory: str | Path) -> SelectionSession:
    return SessionStore(directory).load()
