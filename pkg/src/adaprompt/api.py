"""HTTP service exposing live selection sessions to annotators.

The engine for each session runs in a background thread; annotation replies
arrive over HTTP and are handed to the engine through a mailbox, so the same
engine code serves scripted stubs, the interactive CLI, and this service.
Wire shape: JSON bodies, camelCase keys, errors as {"code", "message"}.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.middleware.cors import CORSMiddleware

from .backends import EmbeddingBackend, ModelBackend
from .datasets import find_dataset, load_train_pool
from .domain import DomainError, Metric, SchemaError, SessionConfig, Strategy
from .parsing import normalize_answer_input
from .selection import (
    AnnotationAborted,
    BudgetExceedsPool,
    create_session,
    run_strategy,
)
from .session import (
    AnnotationReply,
    AnnotationRequest,
    SelectionSession,
    SessionStatus,
    SessionStore,
)

COMMIT_WAIT_SECONDS = 10.0


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class MailboxAnnotator:
    """Blocks the engine thread until an HTTP reply for the pending question
    arrives; replies for any other question are stale duplicates and dropped."""

    def __init__(self) -> None:
        self._replies: "queue.Queue[tuple[AnnotationReply, str]]" = queue.Queue()

    def deliver(self, reply: AnnotationReply, question_id: str) -> None:
        self._replies.put((reply, question_id))

    def __call__(self, request: AnnotationRequest) -> AnnotationReply:
        while True:
            reply, question_id = self._replies.get()
            if question_id == request.question.id:
                return reply


@dataclass
class ManagedSession:
    store: SessionStore
    session: SelectionSession
    mailbox: MailboxAnnotator = field(default_factory=MailboxAnnotator)
    thread: Optional[threading.Thread] = None
    error: Optional[BaseException] = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionManager:
    """Owns every live session: directories, engine threads, and mailboxes."""

    def __init__(
        self,
        root: str | Path,
        datasets_dir: str | Path,
        backend: Optional[ModelBackend] = None,
        embedder: Optional[EmbeddingBackend] = None,
        scan_existing: bool = True,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.datasets_dir = Path(datasets_dir)
        self.backend = backend
        self.embedder = embedder
        self.sessions: dict[str, ManagedSession] = {}
        self._lock = threading.Lock()
        if scan_existing:
            self._load_existing()

    def _load_existing(self) -> None:
        for entry in sorted(self.root.iterdir() if self.root.exists() else []):
            store = SessionStore(entry)
            if entry.is_dir() and store.exists():
                session = store.load()
                self.sessions[session.id] = ManagedSession(store=store, session=session)

    def _next_id(self) -> str:
        numbers = [0]
        for session_id in self.sessions:
            if session_id.startswith("s") and session_id[1:].isdigit():
                numbers.append(int(session_id[1:]))
        return f"s{max(numbers) + 1:04d}"

    def create(self, dataset_name: str, config: SessionConfig) -> ManagedSession:
        if config.strategy is Strategy.FIXED:
            raise ApiError(
                400, "SchemaError", "the fixed strategy loads a file; it has no live session"
            )
        try:
            manifest = find_dataset(self.datasets_dir, dataset_name)
        except SchemaError as exc:
            raise ApiError(404, "UnknownDataset", str(exc)) from exc
        pool = load_train_pool(manifest)
        with self._lock:
            session_id = self._next_id()
            store = SessionStore(self.root / session_id)
            try:
                session = create_session(
                    store, dataset_name, config, pool, session_id=session_id
                )
            except BudgetExceedsPool as exc:
                raise ApiError(400, "BudgetExceedsPool", str(exc)) from exc
            managed = ManagedSession(store=store, session=session)
            self.sessions[session_id] = managed
        self.ensure_running(managed)
        return managed

    def adopt(self, managed: ManagedSession) -> None:
        """Register an externally created session (used by the CLI's http mode)."""
        with self._lock:
            self.sessions[managed.session.id] = managed

    def get(self, session_id: str) -> ManagedSession:
        managed = self.sessions.get(session_id)
        if managed is None:
            raise ApiError(404, "UnknownSession", f"no session {session_id!r}")
        return managed

    def ensure_running(self, managed: ManagedSession) -> None:
        """Start (or restart after a server reboot) the engine thread."""
        with managed.lock:
            if managed.session.status in (SessionStatus.COMPLETE, SessionStatus.ABORTED):
                return
            if managed.thread is not None and managed.thread.is_alive():
                return
            if managed.error is not None:
                return  # a failed run stays visible until recreated/resumed deliberately

            def run() -> None:
                try:
                    run_strategy(
                        managed.store,
                        managed.session,
                        backend=self.backend,
                        annotator=managed.mailbox,
                        embedder=self.embedder,
                    )
                except AnnotationAborted:
                    pass
                except BaseException as exc:  # surfaced via the session view
                    managed.error = exc

            managed.thread = threading.Thread(
                target=run, name=f"engine-{managed.session.id}", daemon=True
            )
            managed.thread.start()


# ---------------------------------------------------------------------------
# Views


def _pending_view(pending: AnnotationRequest) -> dict[str, Any]:
    question = pending.question
    samples: list[dict[str, Any]] = []
    disagreement = None
    entropy = None
    if pending.report is not None:
        report = pending.report
        disagreement = report.disagreement
        entropy = report.entropy_nats
        for answer, count in report.distribution.counts:
            raws = [raw for raw, extracted in report.samples if extracted == answer]
            samples.append(
                {
                    "answer": {"canonical": answer.canonical, "valid": answer.valid},
                    "count": count,
                    "raws": raws,
                }
            )
    return {
        "round": pending.round,
        "question": {
            "id": question.id,
            "text": question.text,
            "kind": question.kind.value,
            "choices": [
                {"label": label, "text": text} for label, text in (question.choices or ())
            ]
            or None,
        },
        "samples": samples,
        "disagreement": disagreement,
        "entropy": entropy,
    }


def _session_view(managed: ManagedSession) -> dict[str, Any]:
    session = managed.session
    progress = []
    records = {record.round: record for record in session.round_records}
    for exemplar in session.exemplar_set.exemplars:
        provenance = exemplar.provenance
        record = records.get(provenance.round)
        scores = provenance.scores_at_selection
        progress.append(
            {
                "round": provenance.round,
                "questionId": exemplar.question.id,
                "questionText": exemplar.question.text,
                "disagreement": scores[0] if scores else None,
                "entropy": scores[1] if scores else None,
                "tieBreakApplied": record.tie_break_applied if record else False,
                "annotatorId": provenance.annotator_id,
            }
        )
    return {
        "id": session.id,
        "dataset": session.dataset,
        "status": session.status.value,
        "round": session.current_round(),
        "budgetK": session.config.budget_k,
        "strategy": session.config.strategy.value,
        "metric": session.config.metric.value,
        "poolSize": len(session.pool_snapshot),
        "progress": progress,
        "pending": _pending_view(session.pending) if session.pending else None,
        "error": str(managed.error) if managed.error else None,
    }


def _summary_view(managed: ManagedSession) -> dict[str, Any]:
    session = managed.session
    return {
        "id": session.id,
        "dataset": session.dataset,
        "status": session.status.value,
        "round": session.current_round(),
        "budgetK": session.config.budget_k,
        "strategy": session.config.strategy.value,
        "metric": session.config.metric.value,
    }


def _config_from_body(body: dict[str, Any], preset_k: int) -> SessionConfig:
    try:
        return SessionConfig(
            budget_k=int(body.get("budget_k", preset_k)),
            metric=Metric(body.get("metric", Metric.ENTROPY.value)),
            strategy=Strategy(body.get("strategy", Strategy.ADAPTIVE.value)),
            seed=int(body.get("seed", 0)),
            samples_l=int(body.get("samples_l", 10)),
            pool_cap_s=int(body.get("pool_cap_s", 0)),
            sampling_temperature=float(body.get("sampling_temperature", 0.7)),
            max_in_flight=int(body.get("max_in_flight", 4)),
        )
    except (DomainError, ValueError, TypeError) as exc:
        raise ApiError(400, "SchemaError", f"bad session config: {exc}") from exc


# ---------------------------------------------------------------------------
# Application


def create_app(manager: SessionManager) -> FastAPI:
    app = FastAPI(title="adaprompt annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.manager = manager

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, error: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=error.status, content={"code": error.code, "message": error.message}
        )

    async def read_body(request: Request) -> dict[str, Any]:
        try:
            data = await request.json()
        except json.JSONDecodeError as exc:
            raise ApiError(400, "SchemaError", f"body is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ApiError(400, "SchemaError", "body must be a JSON object")
        return data

    @app.get("/sessions")
    async def list_sessions() -> dict[str, Any]:
        summaries = [
            _summary_view(managed)
            for _, managed in sorted(manager.sessions.items())
        ]
        return {"sessions": summaries}

    @app.post("/sessions", status_code=201)
    async def create_session_endpoint(request: Request) -> dict[str, Any]:
        body = await read_body(request)
        dataset = body.get("dataset")
        if not isinstance(dataset, str) or not dataset:
            raise ApiError(400, "SchemaError", "body needs a 'dataset' name")
        config_body = body.get("config", {})
        if not isinstance(config_body, dict):
            raise ApiError(400, "SchemaError", "'config' must be an object")
        try:
            manifest = find_dataset(manager.datasets_dir, dataset)
        except SchemaError as exc:
            raise ApiError(404, "UnknownDataset", str(exc)) from exc
        config = _config_from_body(config_body, manifest.preset_k)
        managed = manager.create(dataset, config)
        return {"id": managed.session.id}

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str) -> dict[str, Any]:
        managed = manager.get(session_id)
        manager.ensure_running(managed)
        return _session_view(managed)

    @app.get("/sessions/{session_id}/pending")
    async def get_pending(session_id: str) -> dict[str, Any]:
        managed = manager.get(session_id)
        manager.ensure_running(managed)
        session = managed.session
        if session.status is SessionStatus.COMPLETE:
            raise ApiError(410, "SessionComplete", "the session has all its exemplars")
        if session.status is SessionStatus.ABORTED:
            raise ApiError(409, "SessionAborted", "the session was aborted")
        if session.status is SessionStatus.AWAITING_SCORES or session.pending is None:
            raise ApiError(409, "ScoringInProgress", "scores are being computed; poll again")
        return _pending_view(session.pending)

    @app.post("/sessions/{session_id}/annotations")
    async def post_annotation(session_id: str, request: Request) -> dict[str, Any]:
        managed = manager.get(session_id)
        manager.ensure_running(managed)
        body = await read_body(request)
        question_id = body.get("questionId")
        if not isinstance(question_id, str) or not question_id:
            raise ApiError(400, "SchemaError", "body needs the pending 'questionId'")
        session = managed.session

        committed_round = None
        for exemplar in session.exemplar_set.exemplars:
            if exemplar.question.id == question_id:
                committed_round = exemplar.provenance.round
        if committed_round is not None:
            return {
                "status": session.status.value,
                "round": session.current_round(),
                "alreadyCommitted": True,
                "warnings": [],
            }

        if session.status is not SessionStatus.AWAITING_ANNOTATION or session.pending is None:
            raise ApiError(
                409,
                "ScoringInProgress"
                if session.status is SessionStatus.AWAITING_SCORES
                else "WrongState",
                f"no annotation is being awaited (status: {session.status.value})",
            )
        pending = session.pending
        if pending.question.id != question_id:
            raise ApiError(
                409,
                "StaleQuestion",
                f"the pending question is {pending.question.id!r}, not {question_id!r}",
            )

        rationale = body.get("rationale")
        if not isinstance(rationale, str) or not rationale.strip():
            raise ApiError(422, "EmptyRationale", "the rationale must be non-empty")
        annotator_id = body.get("annotatorId")
        if not isinstance(annotator_id, str) or not annotator_id:
            raise ApiError(422, "MissingAnnotator", "annotatorId is required")
        raw_answer = body.get("answer")
        if not isinstance(raw_answer, str):
            raise ApiError(422, "UnparseableAnswer", "the answer must be a string")
        answer = normalize_answer_input(raw_answer, pending.question)
        if not answer.valid:
            raise ApiError(
                422,
                "UnparseableAnswer",
                f"could not normalize {raw_answer!r} for a {pending.question.kind.value} question",
            )

        warnings = []
        previous = session.exemplar_set.exemplars
        if previous and previous[-1].provenance.annotator_id != annotator_id:
            warnings.append(
                f"annotator changed mid-session: "
                f"{previous[-1].provenance.annotator_id} -> {annotator_id}"
            )

        reply = AnnotationReply(
            rationale=rationale.strip(), answer=answer, annotator_id=annotator_id
        )
        managed.mailbox.deliver(reply, question_id)
        deadline = time.monotonic() + COMMIT_WAIT_SECONDS
        while time.monotonic() < deadline:
            if (
                session.status is not SessionStatus.AWAITING_ANNOTATION
                or session.pending is None
                or session.pending.question.id != question_id
            ):
                break
            time.sleep(0.005)
        return {
            "status": session.status.value,
            "round": session.current_round(),
            "alreadyCommitted": False,
            "warnings": warnings,
        }

    @app.get("/sessions/{session_id}/export")
    async def export_session(session_id: str) -> Response:
        managed = manager.get(session_id)
        if managed.session.status is not SessionStatus.COMPLETE:
            raise ApiError(409, "NotComplete", "the session has not finished selecting")
        return Response(
            content=managed.store.exemplar_path.read_bytes(),
            media_type="application/json",
        )

    @app.get("/sessions/{session_id}/uncertainty")
    async def session_uncertainty(session_id: str) -> dict[str, Any]:
        managed = manager.get(session_id)
        records = managed.session.round_records
        if not records:
            raise ApiError(409, "ScoringInProgress", "no round has been scored yet")
        latest = records[-1]
        return {
            "round": latest.round,
            "metric": managed.session.config.metric.value,
            "selectedId": latest.selected_id,
            "tieBreakApplied": latest.tie_break_applied,
            "scored": [
                {"questionId": qid, "disagreement": d, "entropy": e}
                for qid, d, e in latest.scored
            ],
        }

    return app
