"""Self-consistency inference over a test pool, with repeated-run aggregation.

Each test question is asked several times; the modal extracted answer is the
committed prediction (ties fall to the earliest vote; unparseable answers can
win only when no vote parses). Repeated runs draw fresh sample streams over
the same exemplar set and report per-run plus mean accuracy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

from .cache import CompletionBackend, ResponseCache, cache_get_or_fetch
from .domain import DomainError, ExemplarSet, NormalizedAnswer, QuestionPool, dump_json, render_prompt
from .parsing import answers_equal, extract_answer
from .uncertainty import AnswerDistribution, EmptySample, distribution_from_samples

EVAL_FILE_VERSION = 1


@dataclass(frozen=True, slots=True)
class EvalConfig:
    votes_per_question: int = 6
    runs: int = 3
    temperature: float = 0.7

    def __post_init__(self) -> None:
        if self.votes_per_question < 1:
            raise DomainError("votes_per_question must be >= 1")
        if self.runs < 1:
            raise DomainError("runs must be >= 1")
        if self.temperature < 0:
            raise DomainError("temperature must be >= 0")


@dataclass(frozen=True, slots=True)
class QuestionOutcome:
    question_id: str
    votes: AnswerDistribution
    chosen: NormalizedAnswer
    correct: bool

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "votes": self.votes.to_json_dict(),
            "chosen": self.chosen.to_json_dict(),
            "correct": self.correct,
        }


@dataclass(frozen=True, slots=True)
class EvalResult:
    per_question: tuple[QuestionOutcome, ...]
    accuracy: float
    run_accuracies: tuple[float, ...]
    mean_accuracy: float

    def to_json_dict(self, config: Optional[EvalConfig] = None) -> dict[str, Any]:
        payload: dict[str, Any] = {"version": EVAL_FILE_VERSION}
        if config is not None:
            payload.update(
                votes_per_question=config.votes_per_question,
                runs=config.runs,
                temperature=config.temperature,
            )
        payload.update(
            accuracy=self.accuracy,
            run_accuracies=list(self.run_accuracies),
            mean_accuracy=self.mean_accuracy,
            per_question=[outcome.to_json_dict() for outcome in self.per_question],
        )
        return payload


def self_consistency_answer(votes: Sequence[NormalizedAnswer]) -> NormalizedAnswer:
    """Modal answer; ties -> earliest first occurrence; the unparseable
    sentinel is eligible only when no vote parsed at all."""
    if not votes:
        raise EmptySample("no votes to aggregate")
    eligible = [vote for vote in votes if vote.valid] or list(votes)
    counts: dict[NormalizedAnswer, int] = {}
    first_seen: dict[NormalizedAnswer, int] = {}
    for index, vote in enumerate(eligible):
        counts[vote] = counts.get(vote, 0) + 1
        first_seen.setdefault(vote, index)
    return max(counts, key=lambda vote: (counts[vote], -first_seen[vote]))


def evaluate(
    exemplars: ExemplarSet,
    test_pool: QuestionPool,
    backend: CompletionBackend,
    eval_config: EvalConfig = EvalConfig(),
    cache: Optional[ResponseCache] = None,
) -> EvalResult:
    """Vote every test question, score correctness against gold, aggregate.

    Run r, vote v uses sample index r * votes_per_question + v, so every run
    draws a disjoint sample stream and reruns replay the cache exactly.
    Reported per-question detail comes from the first run; accuracy is the
    first run's, mean_accuracy averages all runs.
    """
    missing = [q.id for q in test_pool.questions if q.gold_answer is None]
    if missing:
        raise DomainError(f"test questions missing gold answers: {missing}")
    votes_n = eval_config.votes_per_question
    run_accuracies: list[float] = []
    first_run_outcomes: list[QuestionOutcome] = []
    for run in range(eval_config.runs):
        correct_count = 0
        for question in test_pool.questions:
            prompt = render_prompt(exemplars, question)
            votes = []
            for vote_index in range(votes_n):
                raw = cache_get_or_fetch(
                    cache,
                    backend,
                    prompt,
                    eval_config.temperature,
                    run * votes_n + vote_index,
                )
                votes.append(extract_answer(raw, question))
            chosen = self_consistency_answer(votes)
            assert question.gold_answer is not None
            correct = answers_equal(chosen, question.gold_answer)
            correct_count += int(correct)
            if run == 0:
                first_run_outcomes.append(
                    QuestionOutcome(
                        question_id=question.id,
                        votes=distribution_from_samples(votes),
                        chosen=chosen,
                        correct=correct,
                    )
                )
        run_accuracies.append(correct_count / len(test_pool.questions))
    first_run_outcomes.sort(key=lambda outcome: outcome.question_id)
    return EvalResult(
        per_question=tuple(first_run_outcomes),
        accuracy=run_accuracies[0],
        run_accuracies=tuple(run_accuracies),
        mean_accuracy=math.fsum(run_accuracies) / len(run_accuracies),
    )


def write_eval_json(path: str | Path, result: EvalResult, config: EvalConfig) -> None:
    Path(path).write_text(dump_json(result.to_json_dict(config)), encoding="utf-8")


def write_eval_csv(path: str | Path, result: EvalResult, test_pool: QuestionPool) -> None:
    gold = {q.id: q.gold_answer for q in test_pool.questions}
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["question_id", "chosen", "gold", "correct"])
        for outcome in result.per_question:
            gold_answer = gold.get(outcome.question_id)
            writer.writerow(
                [
                    outcome.question_id,
                    outcome.chosen.canonical,
                    gold_answer.canonical if gold_answer else "",
                    "true" if outcome.correct else "false",
                ]
            )
