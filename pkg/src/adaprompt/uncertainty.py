"""Uncertainty scoring over l sampled answers to one question.

Two scores: disagreement = (number of distinct answers) / l, and Shannon
entropy of the empirical answer distribution in nats. Both are computed from
the same grouped sample counts, so they rank identically whenever answer
multiplicities are balanced; they are exposed separately because the
selection metric is a configuration switch.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from .cache import CompletionBackend, ResponseCache, cache_get_or_fetch
from .domain import (
    DomainError,
    ExemplarSet,
    NormalizedAnswer,
    Question,
    SessionConfig,
    exemplar_set_hash,
    render_prompt,
)
from .parsing import extract_answer


class EmptySample(DomainError):
    """Scoring needs at least one sampled answer."""


@dataclass(frozen=True, slots=True)
class AnswerDistribution:
    """Grouped answer counts; key order is first occurrence in the samples."""

    counts: tuple[tuple[NormalizedAnswer, int], ...]
    total_l: int

    def __post_init__(self) -> None:
        if self.total_l < 1:
            raise EmptySample("distribution needs at least one sample")
        if not self.counts:
            raise EmptySample("distribution needs at least one answer group")
        if any(count < 1 for _, count in self.counts):
            raise DomainError("answer counts must be positive")
        if sum(count for _, count in self.counts) != self.total_l:
            raise DomainError("answer counts must sum to the sample count")
        answers = [answer for answer, _ in self.counts]
        if len(set(answers)) != len(answers):
            raise DomainError("duplicate answer group in distribution")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "total_l": self.total_l,
            "counts": [[answer.to_json_dict(), count] for answer, count in self.counts],
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "AnswerDistribution":
        return cls(
            counts=tuple(
                (NormalizedAnswer.from_json_dict(answer), int(count))
                for answer, count in data["counts"]
            ),
            total_l=int(data["total_l"]),
        )


def distribution_from_samples(answers: Sequence[NormalizedAnswer]) -> AnswerDistribution:
    if not answers:
        raise EmptySample("no sampled answers to group")
    grouped: dict[NormalizedAnswer, int] = {}
    for answer in answers:
        grouped[answer] = grouped.get(answer, 0) + 1
    return AnswerDistribution(counts=tuple(grouped.items()), total_l=len(answers))


def disagreement_score(distribution: AnswerDistribution) -> float:
    return len(distribution.counts) / distribution.total_l


def entropy_score(distribution: AnswerDistribution) -> float:
    total = distribution.total_l
    value = -math.fsum(
        (count / total) * math.log(count / total) for _, count in distribution.counts
    )
    return value + 0.0  # fold IEEE -0.0 (single-answer case) into plain 0.0


@dataclass(frozen=True, slots=True)
class UncertaintyReport:
    """Everything measured for one question under one exemplar set."""

    question_id: str
    exemplar_set_hash: str
    samples: tuple[tuple[str, NormalizedAnswer], ...]
    distribution: AnswerDistribution
    disagreement: float
    entropy_nats: float

    def score(self, metric_name: str) -> float:
        return self.disagreement if metric_name == "disagreement" else self.entropy_nats

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "exemplar_set_hash": self.exemplar_set_hash,
            "samples": [[raw, answer.to_json_dict()] for raw, answer in self.samples],
            "distribution": self.distribution.to_json_dict(),
            "disagreement": self.disagreement,
            "entropy_nats": self.entropy_nats,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "UncertaintyReport":
        return cls(
            question_id=str(data["question_id"]),
            exemplar_set_hash=str(data["exemplar_set_hash"]),
            samples=tuple(
                (str(raw), NormalizedAnswer.from_json_dict(answer))
                for raw, answer in data["samples"]
            ),
            distribution=AnswerDistribution.from_json_dict(data["distribution"]),
            disagreement=float(data["disagreement"]),
            entropy_nats=float(data["entropy_nats"]),
        )


def report_from_samples(
    question: Question, exemplars: ExemplarSet | None, raw_samples: Sequence[str]
) -> UncertaintyReport:
    """Build the full report from already-fetched raw completions."""
    pairs = tuple((raw, extract_answer(raw, question)) for raw in raw_samples)
    distribution = distribution_from_samples([answer for _, answer in pairs])
    return UncertaintyReport(
        question_id=question.id,
        exemplar_set_hash=exemplar_set_hash(exemplars),
        samples=pairs,
        distribution=distribution,
        disagreement=disagreement_score(distribution),
        entropy_nats=entropy_score(distribution),
    )


def score_question(
    backend: CompletionBackend,
    exemplars: ExemplarSet | None,
    question: Question,
    config: SessionConfig,
    cache: Optional[ResponseCache] = None,
) -> UncertaintyReport:
    """Sample the model l times on E ⊕ q and score the answer spread.

    Samples are fetched (or replayed from the cache) in index order; every
    fetched response is cached before the next request, so an interrupting
    backend failure loses at most the in-flight sample.
    """
    prompt = render_prompt(exemplars, question)
    raws = [
        cache_get_or_fetch(cache, backend, prompt, config.sampling_temperature, index)
        for index in range(config.samples_l)
    ]
    return report_from_samples(question, exemplars, raws)


def score_pool(
    backend: CompletionBackend,
    exemplars: ExemplarSet | None,
    questions: Sequence[Question],
    config: SessionConfig,
    cache: Optional[ResponseCache] = None,
) -> list[UncertaintyReport]:
    """Score many questions, fanning out up to config.max_in_flight workers.

    Results come back in question order regardless of completion order.
    """
    if config.max_in_flight == 1 or len(questions) <= 1:
        return [score_question(backend, exemplars, q, config, cache) for q in questions]
    with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
        futures = [
            pool.submit(score_question, backend, exemplars, q, config, cache)
            for q in questions
        ]
        return [future.result() for future in futures]
