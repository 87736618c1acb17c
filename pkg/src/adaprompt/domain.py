"""Core value types: questions, answers, exemplars, pools, run configuration.

Everything here is an immutable value (frozen dataclasses), safe to share
across threads. Prompt assembly and pool subsampling live here too because
every other module needs them.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Optional

ANSWER_ANCHOR = "The answer is"
ZERO_SHOT_TRIGGER = "Let's think step by step."

CHOICE_LABELS = "ABCDE"

#: Default exemplar budgets per well-known dataset name.
PRESET_K = {
    "aqua": 4,
    "letter_concat": 4,
    "strategyqa": 6,
    "csqa": 7,
    "gsm8k": 8,
    "svamp": 8,
}


class DomainError(ValueError):
    """Invalid construction or use of a core value."""


class EmptyPool(DomainError):
    """An operation needed at least one question but the pool was empty."""


class SchemaError(DomainError):
    """A persisted artifact (dataset, exemplar file, fixture) is malformed."""


class TaskKind(str, Enum):
    NUMERIC = "numeric"
    MULTIPLE_CHOICE = "multiple_choice"
    BOOLEAN = "boolean"
    STRING_CONCAT = "string_concat"


class Metric(str, Enum):
    DISAGREEMENT = "disagreement"
    ENTROPY = "entropy"


class Strategy(str, Enum):
    ADAPTIVE = "adaptive"
    ACTIVE = "active"
    RANDOM = "random"
    AUTO_COT = "auto-cot"
    FIXED = "fixed"


class PoolRole(str, Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True, slots=True)
class NormalizedAnswer:
    """A canonicalized final answer; invalid marks the single unparseable bucket.

    Equality is field equality. Invalid answers always carry canonical == ""
    so every unparseable response of a kind collapses into one bucket.
    """

    kind: TaskKind
    canonical: str
    valid: bool = True

    def __post_init__(self) -> None:
        if not self.valid and self.canonical != "":
            raise DomainError("invalid answers must use the empty canonical form")
        if self.valid and self.canonical == "":
            raise DomainError("valid answers need a non-empty canonical form")

    @classmethod
    def sentinel(cls, kind: TaskKind) -> "NormalizedAnswer":
        return cls(kind=kind, canonical="", valid=False)

    def to_json_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "canonical": self.canonical, "valid": self.valid}

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "NormalizedAnswer":
        try:
            return cls(
                kind=TaskKind(data["kind"]),
                canonical=str(data["canonical"]),
                valid=bool(data["valid"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"bad answer record: {exc}") from exc


@dataclass(frozen=True, slots=True)
class Question:
    """One train or test item. choices is present iff kind is multiple choice."""

    id: str
    text: str
    kind: TaskKind
    choices: Optional[tuple[tuple[str, str], ...]] = None
    gold_answer: Optional[NormalizedAnswer] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise DomainError("question id must be non-empty")
        if self.kind is TaskKind.MULTIPLE_CHOICE:
            if not self.choices:
                raise DomainError(f"{self.id}: multiple-choice question needs choices")
            labels = [label for label, _ in self.choices]
            expected = list(CHOICE_LABELS[: len(labels)])
            if labels != expected:
                raise DomainError(
                    f"{self.id}: choice labels must run consecutively from A, got {labels}"
                )
        elif self.choices is not None:
            raise DomainError(f"{self.id}: only multiple-choice questions carry choices")
        if self.gold_answer is not None and self.gold_answer.kind is not self.kind:
            raise DomainError(f"{self.id}: gold answer kind mismatch")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in (self.choices or ()))

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "question": self.text,
            "kind": self.kind.value,
            "choices": [text for _, text in self.choices] if self.choices else None,
            "answer": self.gold_answer.canonical if self.gold_answer else None,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "Question":
        try:
            kind = TaskKind(data["kind"])
            raw_choices = data.get("choices")
            choices = None
            if raw_choices is not None:
                choices = tuple(
                    (CHOICE_LABELS[i], str(text)) for i, text in enumerate(raw_choices)
                )
            gold = data.get("answer")
            answer = None
            if gold is not None:
                answer = NormalizedAnswer(kind=kind, canonical=str(gold))
            return cls(
                id=str(data["id"]),
                text=str(data["question"]),
                kind=kind,
                choices=choices,
                gold_answer=answer,
            )
        except (KeyError, ValueError, TypeError, IndexError) as exc:
            raise SchemaError(f"bad question record: {exc}") from exc


@dataclass(frozen=True, slots=True)
class Provenance:
    """How an exemplar came to be: which round picked it, under which strategy."""

    round: int
    strategy: str
    annotator_id: str
    scores_at_selection: Optional[tuple[float, float]] = None  # (disagreement, entropy)

    def __post_init__(self) -> None:
        if self.round < 1:
            raise DomainError("provenance round starts at 1")

    def to_json_dict(self) -> dict[str, Any]:
        scores = None
        if self.scores_at_selection is not None:
            disagreement, entropy = self.scores_at_selection
            scores = {"disagreement": disagreement, "entropy": entropy}
        return {
            "round": self.round,
            "strategy": self.strategy,
            "scores_at_selection": scores,
            "annotator_id": self.annotator_id,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "Provenance":
        try:
            scores = data.get("scores_at_selection")
            parsed = None
            if scores is not None:
                parsed = (float(scores["disagreement"]), float(scores["entropy"]))
            return cls(
                round=int(data["round"]),
                strategy=str(data["strategy"]),
                annotator_id=str(data["annotator_id"]),
                scores_at_selection=parsed,
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"bad provenance record: {exc}") from exc


@dataclass(frozen=True, slots=True)
class Exemplar:
    """An annotated (question, rationale, answer) triple."""

    question: Question
    rationale: str
    answer: NormalizedAnswer
    provenance: Provenance

    def __post_init__(self) -> None:
        if not self.rationale:
            raise DomainError(f"{self.question.id}: exemplar rationale must be non-empty")
        if self.answer.kind is not self.question.kind:
            raise DomainError(f"{self.question.id}: exemplar answer kind mismatch")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "question": self.question.to_json_dict(),
            "rationale": self.rationale,
            "answer": self.answer.to_json_dict(),
            "provenance": self.provenance.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "Exemplar":
        try:
            return cls(
                question=Question.from_json_dict(data["question"]),
                rationale=str(data["rationale"]),
                answer=NormalizedAnswer.from_json_dict(data["answer"]),
                provenance=Provenance.from_json_dict(data["provenance"]),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad exemplar record: {exc}") from exc


@dataclass(frozen=True, slots=True)
class ExemplarSet:
    """Ordered exemplars (selection order) capped by the budget."""

    exemplars: tuple[Exemplar, ...] = ()
    budget_k: int = 0

    def __post_init__(self) -> None:
        if self.budget_k < 0:
            raise DomainError("budget_k must be >= 0")
        if len(self.exemplars) > self.budget_k:
            raise DomainError("exemplar count exceeds budget")
        ids = [e.question.id for e in self.exemplars]
        if len(set(ids)) != len(ids):
            raise DomainError("duplicate question id in exemplar set")
        rounds = [e.provenance.round for e in self.exemplars]
        if rounds != list(range(1, len(rounds) + 1)):
            raise DomainError("exemplar rounds must be contiguous from 1")

    def __len__(self) -> int:
        return len(self.exemplars)

    def with_exemplar(self, exemplar: Exemplar) -> "ExemplarSet":
        return ExemplarSet(self.exemplars + (exemplar,), self.budget_k)

    def question_ids(self) -> set[str]:
        return {e.question.id for e in self.exemplars}


@dataclass(frozen=True, slots=True)
class QuestionPool:
    """An ordered set of questions with a role; test pools require gold answers."""

    questions: tuple[Question, ...]
    role: PoolRole = PoolRole.TRAIN

    def __post_init__(self) -> None:
        ids = [q.id for q in self.questions]
        if len(set(ids)) != len(ids):
            raise DomainError("duplicate question id in pool")
        if self.role is PoolRole.TEST:
            missing = [q.id for q in self.questions if q.gold_answer is None]
            if missing:
                raise DomainError(f"test pool questions missing gold answers: {missing}")

    def __len__(self) -> int:
        return len(self.questions)

    def by_id(self, question_id: str) -> Question:
        for q in self.questions:
            if q.id == question_id:
                return q
        raise KeyError(question_id)


@dataclass(frozen=True, slots=True)
class SessionConfig:
    """Knobs for one selection run."""

    budget_k: int
    metric: Metric = Metric.ENTROPY
    strategy: Strategy = Strategy.ADAPTIVE
    seed: int = 0
    samples_l: int = 10
    pool_cap_s: int = 0  # 0 means "use the default 50 * budget_k"
    sampling_temperature: float = 0.7
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.budget_k < 1:
            raise DomainError("budget_k must be >= 1")
        if self.samples_l < 1:
            raise DomainError("samples_l must be >= 1")
        if self.pool_cap_s == 0:
            object.__setattr__(self, "pool_cap_s", 50 * self.budget_k)
        if self.pool_cap_s < self.budget_k:
            raise DomainError("pool_cap_s must be >= budget_k")
        if self.sampling_temperature < 0:
            raise DomainError("sampling_temperature must be >= 0")
        if self.max_in_flight < 1:
            raise DomainError("max_in_flight must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in 64 unsigned bits")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "budget_k": self.budget_k,
            "metric": self.metric.value,
            "strategy": self.strategy.value,
            "seed": self.seed,
            "samples_l": self.samples_l,
            "pool_cap_s": self.pool_cap_s,
            "sampling_temperature": self.sampling_temperature,
            "max_in_flight": self.max_in_flight,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "SessionConfig":
        try:
            return cls(
                budget_k=int(data["budget_k"]),
                metric=Metric(data["metric"]),
                strategy=Strategy(data["strategy"]),
                seed=int(data["seed"]),
                samples_l=int(data["samples_l"]),
                pool_cap_s=int(data["pool_cap_s"]),
                sampling_temperature=float(data["sampling_temperature"]),
                max_in_flight=int(data["max_in_flight"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"bad session config: {exc}") from exc


# ---------------------------------------------------------------------------
# Prompt assembly


def _question_block(question: Question) -> str:
    lines = [f"Q: {question.text}"]
    if question.kind is TaskKind.MULTIPLE_CHOICE and question.choices:
        rendered = " ".join(f"({label}) {text}" for label, text in question.choices)
        lines.append(f"Answer Choices: {rendered}")
    return "\n".join(lines)


def _exemplar_block(exemplar: Exemplar) -> str:
    answer_line = f"A: {exemplar.rationale} {ANSWER_ANCHOR} {exemplar.answer.canonical}."
    return f"{_question_block(exemplar.question)}\n{answer_line}\n\n"


def render_prompt(exemplars: ExemplarSet | None, question: Question) -> str:
    """Render E ⊕ q: every exemplar as a worked Q/A block, then the open question.

    With no exemplars the answer line opens with the step-by-step trigger
    phrase; otherwise it is left at a bare "A:" for the model to complete.
    """
    items = exemplars.exemplars if exemplars is not None else ()
    parts = [_exemplar_block(e) for e in items]
    parts.append(f"{_question_block(question)}\nA:")
    prompt = "".join(parts)
    if not items:
        prompt += f" {ZERO_SHOT_TRIGGER}"
    return prompt


def exemplar_set_hash(exemplars: ExemplarSet | None) -> str:
    """Stable digest of the rendered exemplar prefix, for audit records."""
    items = exemplars.exemplars if exemplars is not None else ()
    blob = "".join(_exemplar_block(e) for e in items)
    return "sha256:" + hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Pool subsampling


def subsample_pool(pool: QuestionPool, cap: int, seed: int) -> QuestionPool:
    """Seeded uniform without-replacement subsample keeping the pool's order.

    Pools already within the cap come back unchanged.
    """
    if len(pool) == 0:
        raise EmptyPool("cannot subsample an empty pool")
    if cap < 1:
        raise DomainError("subsample cap must be >= 1")
    if len(pool) <= cap:
        return pool
    rng = random.Random(seed)
    keep = sorted(rng.sample(range(len(pool.questions)), cap))
    return QuestionPool(tuple(pool.questions[i] for i in keep), pool.role)


# ---------------------------------------------------------------------------
# Exemplar file I/O

EXEMPLAR_FILE_VERSION = 1


def exemplar_set_to_file_dict(
    exemplar_set: ExemplarSet, dataset: str, strategy: str
) -> dict[str, Any]:
    return {
        "version": EXEMPLAR_FILE_VERSION,
        "dataset": dataset,
        "strategy": strategy,
        "exemplars": [e.to_json_dict() for e in exemplar_set.exemplars],
    }


def exemplar_set_from_file_dict(data: dict[str, Any]) -> tuple[ExemplarSet, str, str]:
    if not isinstance(data, dict):
        raise SchemaError("exemplar file must hold a JSON object")
    if data.get("version") != EXEMPLAR_FILE_VERSION:
        raise SchemaError(f"unsupported exemplar file version: {data.get('version')!r}")
    for key in ("dataset", "strategy", "exemplars"):
        if key not in data:
            raise SchemaError(f"exemplar file missing field {key!r}")
    if not isinstance(data["exemplars"], list):
        raise SchemaError("exemplar file field 'exemplars' must be a list")
    exemplars = tuple(Exemplar.from_json_dict(entry) for entry in data["exemplars"])
    exemplar_set = ExemplarSet(exemplars=exemplars, budget_k=len(exemplars))
    return exemplar_set, str(data["dataset"]), str(data["strategy"])


def dump_json(data: Any) -> str:
    """The one JSON writer for persisted artifacts: keeps files byte-stable."""
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def save_exemplar_file(
    path: str | Path, exemplar_set: ExemplarSet, dataset: str, strategy: str
) -> None:
    payload = dump_json(exemplar_set_to_file_dict(exemplar_set, dataset, strategy))
    Path(path).write_text(payload, encoding="utf-8")


def load_exemplar_file(path: str | Path) -> tuple[ExemplarSet, str, str]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"exemplar file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"exemplar file is not valid JSON: {exc}") from exc
    return exemplar_set_from_file_dict(data)
