"""Exemplar-selection strategies.

The flagship strategy re-scores the remaining pool after every annotation and
always routes the currently most-uncertain question to the annotator; the
baselines are one-shot top-k by uncertainty, a seeded random draw, cluster-
representative selection with model-written rationales, and hand-authored
fixed exemplar files. All annotating strategies drive the same engine shape:
append a round record, park a pending annotation request, checkpoint, commit
the reply, repeat — so interrupted runs resume from the session file without
repeating any committed work.
"""

from __future__ import annotations

import logging
import random
from typing import Callable, Optional, Sequence

import numpy as np

from .backends import EmbeddingBackend, ModelBackend
from .cache import cache_get_or_fetch
from .domain import (
    DomainError,
    Exemplar,
    ExemplarSet,
    Metric,
    Provenance,
    Question,
    QuestionPool,
    SessionConfig,
    Strategy,
    render_prompt,
    subsample_pool,
)
from .domain import load_exemplar_file as _load_exemplar_file
from .kmeans import DegenerateClustering, kmeans, l2_normalize, nearest_to_centroids
from .parsing import extract_answer
from .session import (
    AnnotationReply,
    AnnotationRequest,
    RoundRecord,
    SelectionSession,
    SessionError,
    SessionStatus,
    SessionStore,
    UncertaintyReport,
)
from .uncertainty import score_pool, score_question

__all__ = [
    "AnnotationAborted",
    "Annotator",
    "BudgetExceedsPool",
    "DegenerateClustering",
    "active_select",
    "adaptive_select",
    "argmax_scored",
    "auto_cot_select",
    "create_session",
    "effective_strategy_label",
    "fixed_exemplars",
    "random_draw",
    "random_select",
    "resume_or_create_session",
    "run_strategy",
    "stub_annotator",
]

logger = logging.getLogger(__name__)

Annotator = Callable[[AnnotationRequest], AnnotationReply]


class AnnotationAborted(RuntimeError):
    """The annotator quit; the session stays checkpointed and resumable."""


class BudgetExceedsPool(DomainError):
    """budget_k is larger than the candidate pool."""


def effective_strategy_label(config: SessionConfig) -> str:
    """The strategy name recorded in files.

    With a budget of one, the adaptive loop and one-shot top-k are the same
    computation (a single E=∅ ranking plus one annotation), so both record
    the one-shot name and produce identical artifacts.
    """
    if config.budget_k == 1 and config.strategy in (Strategy.ADAPTIVE, Strategy.ACTIVE):
        return Strategy.ACTIVE.value
    return config.strategy.value


def argmax_scored(
    scored: Sequence[tuple[str, float, float]], metric: Metric
) -> tuple[str, bool]:
    """Highest-scoring question id under the metric; ties fall to the smallest id.

    Returns (selected_id, tie_break_applied).
    """
    if not scored:
        raise DomainError("cannot select from an empty score table")
    index = 1 if metric is Metric.DISAGREEMENT else 2
    best = max(row[index] for row in scored)
    contenders = [row[0] for row in scored if row[index] == best]
    return min(contenders), len(contenders) > 1


# ---------------------------------------------------------------------------
# Session construction


def create_session(
    store: SessionStore,
    dataset: str,
    config: SessionConfig,
    pool: QuestionPool,
    session_id: Optional[str] = None,
) -> SelectionSession:
    """Subsample the pool, persist a fresh session, and return it."""
    if len(pool) < config.budget_k:
        raise BudgetExceedsPool(
            f"budget {config.budget_k} exceeds pool of {len(pool)} questions"
        )
    snapshot = subsample_pool(pool, config.pool_cap_s, config.seed)
    if session_id is None:
        session_id = (
            f"{dataset}-{config.strategy.value}-{config.metric.value}"
            f"-k{config.budget_k}-seed{config.seed}"
        )
    session = SelectionSession(
        id=session_id,
        dataset=dataset,
        config=config,
        pool_snapshot=snapshot,
        exemplar_set=ExemplarSet((), config.budget_k),
    )
    store.checkpoint(session)
    return session


def resume_or_create_session(
    store: SessionStore,
    dataset: str,
    config: SessionConfig,
    pool: QuestionPool,
    session_id: Optional[str] = None,
) -> SelectionSession:
    """Load the session already in the store, or create one; configs must agree."""
    if store.exists():
        session = store.load()
        if session.config != config:
            raise SessionError(
                "existing session in the output directory was created with a "
                "different configuration; pick a fresh directory or matching flags"
            )
        if session.dataset != dataset:
            raise SessionError(
                f"existing session is for dataset {session.dataset!r}, not {dataset!r}"
            )
        return session
    return create_session(store, dataset, config, pool, session_id)


# ---------------------------------------------------------------------------
# Engine plumbing shared by the annotating strategies


def _park_pending(
    store: SessionStore,
    session: SelectionSession,
    scored: tuple[tuple[str, float, float], ...],
    selected_id: str,
    tie_break: bool,
    report: Optional[UncertaintyReport],
) -> None:
    round_no = len(session.exemplar_set) + 1
    session.round_records.append(
        RoundRecord(round=round_no, scored=scored, selected_id=selected_id, tie_break_applied=tie_break)
    )
    session.pending = AnnotationRequest(
        round=round_no, question=session.pool_snapshot.by_id(selected_id), report=report
    )
    session.status = SessionStatus.AWAITING_ANNOTATION
    store.checkpoint(session)


def _annotate_pending(
    store: SessionStore, session: SelectionSession, annotator: Annotator, label: str
) -> None:
    request = session.pending
    assert request is not None
    try:
        reply = annotator(request)
    except AnnotationAborted:
        # Leave the pending request parked; the next run re-presents it.
        store.checkpoint(session)
        raise
    commit_reply(store, session, reply, label)


def commit_reply(
    store: SessionStore, session: SelectionSession, reply: AnnotationReply, label: str
) -> None:
    """Turn the pending request plus a validated reply into the next exemplar."""
    request = session.pending
    if request is None:
        raise SessionError("no pending annotation to commit")
    reply.validate_for(request.question)
    previous = session.exemplar_set.exemplars
    if previous and previous[-1].provenance.annotator_id != reply.annotator_id:
        logger.warning(
            "annotator changed mid-session: %s -> %s",
            previous[-1].provenance.annotator_id,
            reply.annotator_id,
        )
    scores = None
    if request.report is not None:
        scores = (request.report.disagreement, request.report.entropy_nats)
    exemplar = Exemplar(
        question=request.question,
        rationale=reply.rationale,
        answer=reply.answer,
        provenance=Provenance(
            round=request.round,
            strategy=label,
            annotator_id=reply.annotator_id,
            scores_at_selection=scores,
        ),
    )
    session.exemplar_set = session.exemplar_set.with_exemplar(exemplar)
    session.pending = None
    if len(session.exemplar_set) >= session.config.budget_k:
        session.status = SessionStatus.COMPLETE
        store.checkpoint(session)
        store.write_exemplar_file(session, label)
    else:
        session.status = SessionStatus.AWAITING_SCORES
        store.checkpoint(session)


def _guard_runnable(session: SelectionSession) -> None:
    if session.status is SessionStatus.ABORTED:
        raise SessionError("session was aborted and cannot be resumed")


# ---------------------------------------------------------------------------
# Strategies


def adaptive_select(
    store: SessionStore,
    session: SelectionSession,
    backend: ModelBackend,
    annotator: Annotator,
) -> ExemplarSet:
    """Budget-many rounds of: re-score the remaining pool under the current
    exemplars, annotate the argmax-uncertainty question, grow the set."""
    _guard_runnable(session)
    label = effective_strategy_label(session.config)
    config = session.config
    cache = store.cache()
    while session.status is not SessionStatus.COMPLETE:
        if session.status is SessionStatus.AWAITING_SCORES:
            remaining = session.remaining_questions()
            reports = score_pool(backend, session.exemplar_set, remaining, config, cache)
            scored = tuple((r.question_id, r.disagreement, r.entropy_nats) for r in reports)
            selected_id, tie_break = argmax_scored(scored, config.metric)
            report = next(r for r in reports if r.question_id == selected_id)
            _park_pending(store, session, scored, selected_id, tie_break, report)
        _annotate_pending(store, session, annotator, label)
    return session.exemplar_set


def active_select(
    store: SessionStore,
    session: SelectionSession,
    backend: ModelBackend,
    annotator: Annotator,
) -> ExemplarSet:
    """Score everything once with no exemplars, then annotate the top-k in
    rank order. Later rounds reuse the first ranking minus already-taken ids."""
    _guard_runnable(session)
    label = effective_strategy_label(session.config)
    config = session.config
    cache = store.cache()
    empty = ExemplarSet((), 0)
    while session.status is not SessionStatus.COMPLETE:
        if session.status is SessionStatus.AWAITING_SCORES:
            if session.round_records:
                last = session.round_records[-1]
                table = tuple(row for row in last.scored if row[0] != last.selected_id)
            else:
                remaining = session.remaining_questions()
                reports = score_pool(backend, empty, remaining, config, cache)
                table = tuple((r.question_id, r.disagreement, r.entropy_nats) for r in reports)
            selected_id, tie_break = argmax_scored(table, config.metric)
            # The selected question's evidence re-reads the cached E=∅ samples.
            report = score_question(
                backend, empty, session.pool_snapshot.by_id(selected_id), config, cache
            )
            _park_pending(store, session, table, selected_id, tie_break, report)
        _annotate_pending(store, session, annotator, label)
    return session.exemplar_set


def random_draw(ids: Sequence[str], k: int, seed: int) -> list[str]:
    """Seeded uniform without-replacement draw, in draw order."""
    return random.Random(seed).sample(list(ids), k)


def random_select(
    store: SessionStore, session: SelectionSession, annotator: Annotator
) -> ExemplarSet:
    """Annotate a seeded random draw of budget-many questions; no scoring."""
    _guard_runnable(session)
    label = effective_strategy_label(session.config)
    config = session.config
    order = random_draw(
        [q.id for q in session.pool_snapshot.questions], config.budget_k, config.seed
    )
    while session.status is not SessionStatus.COMPLETE:
        if session.status is SessionStatus.AWAITING_SCORES:
            selected_id = order[len(session.exemplar_set)]
            _park_pending(store, session, (), selected_id, False, None)
        _annotate_pending(store, session, annotator, label)
    return session.exemplar_set


def auto_cot_select(
    store: SessionStore,
    session: SelectionSession,
    backend: ModelBackend,
    embedder: EmbeddingBackend,
) -> ExemplarSet:
    """Cluster the pool by embedding, take each cluster's centroid-nearest
    question, and write its rationale with one zero-shot completion.

    No annotator: the model supplies the reasoning chain. Questions whose
    completion yields no extractable answer keep the raw completion and are
    flagged via the provenance strategy suffix "/unparsed".
    """
    _guard_runnable(session)
    config = session.config
    pool = session.pool_snapshot
    vectors = l2_normalize(np.array([embedder.embed(q.text) for q in pool.questions]))
    assignments, centers, _ = kmeans(vectors, config.budget_k, config.seed)
    picks = nearest_to_centroids(
        vectors, assignments, centers, [q.id for q in pool.questions]
    )
    cache = store.cache()
    for position, point_index in enumerate(picks):
        round_no = position + 1
        if round_no <= len(session.exemplar_set):
            continue  # committed by an earlier, interrupted run
        question = pool.questions[point_index]
        raw = cache_get_or_fetch(cache, backend, render_prompt(None, question), 0.0, 0)
        answer = extract_answer(raw, question)
        label = "auto-cot" if answer.valid else "auto-cot/unparsed"
        exemplar = Exemplar(
            question=question,
            rationale=raw if raw.strip() else "(empty completion)",
            answer=answer,
            provenance=Provenance(
                round=round_no, strategy=label, annotator_id="auto-cot"
            ),
        )
        session.round_records.append(
            RoundRecord(round=round_no, scored=(), selected_id=question.id, tie_break_applied=False)
        )
        session.exemplar_set = session.exemplar_set.with_exemplar(exemplar)
        store.checkpoint(session)
    session.status = SessionStatus.COMPLETE
    store.checkpoint(session)
    store.write_exemplar_file(session, Strategy.AUTO_COT.value)
    return session.exemplar_set


def fixed_exemplars(path) -> ExemplarSet:
    """Load a hand-authored exemplar file (schema-checked)."""
    exemplar_set, _, _ = _load_exemplar_file(path)
    return exemplar_set


def run_strategy(
    store: SessionStore,
    session: SelectionSession,
    backend: Optional[ModelBackend] = None,
    annotator: Optional[Annotator] = None,
    embedder: Optional[EmbeddingBackend] = None,
) -> ExemplarSet:
    """Dispatch a session to its configured strategy."""
    strategy = session.config.strategy
    if strategy is Strategy.ADAPTIVE:
        if backend is None or annotator is None:
            raise DomainError("adaptive selection needs a backend and an annotator")
        return adaptive_select(store, session, backend, annotator)
    if strategy is Strategy.ACTIVE:
        if backend is None or annotator is None:
            raise DomainError("one-shot selection needs a backend and an annotator")
        return active_select(store, session, backend, annotator)
    if strategy is Strategy.RANDOM:
        if annotator is None:
            raise DomainError("random selection needs an annotator")
        return random_select(store, session, annotator)
    if strategy is Strategy.AUTO_COT:
        if backend is None or embedder is None:
            raise DomainError("auto-cot selection needs a backend and an embedder")
        return auto_cot_select(store, session, backend, embedder)
    raise DomainError(
        "the fixed strategy loads an exemplar file directly; use fixed_exemplars()"
    )


def stub_annotator(annotator_id: str = "stub") -> Annotator:
    """Auto-annotate from gold labels with a templated rationale (tests, benchmarks)."""

    def annotate(request: AnnotationRequest) -> AnnotationReply:
        question = request.question
        if question.gold_answer is None:
            raise DomainError(
                f"stub annotator needs a gold answer for question {question.id}"
            )
        rationale = (
            f"Working through \"{question.text}\" one step at a time "
            f"leads directly to the recorded result."
        )
        return AnnotationReply(
            rationale=rationale, answer=question.gold_answer, annotator_id=annotator_id
        )

    return annotate
