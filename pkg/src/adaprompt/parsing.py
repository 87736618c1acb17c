"""Answer extraction and normalization from free-text model output.

The extractor looks for the LAST occurrence of the anchor phrase ("The answer
is", case-insensitive) and normalizes what follows it per task kind. Without
an anchor it falls back to scanning the whole text for the last plausible
value. Failures never raise: they return the per-kind sentinel answer, so all
unparseable outputs collapse into one bucket when counting distinct answers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Optional

from .domain import ANSWER_ANCHOR, NormalizedAnswer, Question, TaskKind

# A signed number with optional currency sign, digit-grouping commas, decimal
# part, and percent sign; never ends on a bare comma.
_NUMBER_RE = re.compile(r"[-+]?\$?(?:\d(?:[\d,]*\d)?(?:\.\d+)?|\.\d+)%?")

# Option letters: parenthesized in any case, or a bare uppercase letter.
_OPTION_RE = re.compile(r"\(([A-Za-z])\)|\b([A-E])\b")

_YESNO_RE = re.compile(r"\b(yes|no|true|false)\b", re.IGNORECASE)

_WORD_RE = re.compile(r"[A-Za-z]+")


class Fallback(str, Enum):
    LAST_VALUE_IN_TEXT = "last_value_in_text"
    NONE = "none"


@dataclass(frozen=True, slots=True)
class ExtractionRule:
    kind: TaskKind
    anchor_phrase: str = ANSWER_ANCHOR
    fallback: Fallback = Fallback.LAST_VALUE_IN_TEXT

    def __post_init__(self) -> None:
        if not self.anchor_phrase:
            raise ValueError("anchor phrase must be non-empty")


def _canonical_numeric(token: str) -> Optional[str]:
    cleaned = token.replace("$", "").replace("%", "").replace(",", "")
    try:
        value = Decimal(cleaned)
    except InvalidOperation:
        return None
    canonical = format(value.normalize(), "f")
    if canonical in ("-0", "0", "0.0", "-0.0"):
        canonical = "0"
    return canonical


def _extract_numeric(text: str, first: bool) -> Optional[str]:
    matches = _NUMBER_RE.findall(text)
    if not matches:
        return None
    # findall with no groups returns the whole match strings.
    token = matches[0] if first else matches[-1]
    return _canonical_numeric(token)


def _extract_choice(text: str, labels: tuple[str, ...], first: bool) -> Optional[str]:
    stripped = text.strip().strip(".,!?;:'\"()").strip()
    if first and len(stripped) == 1 and stripped.upper() in labels:
        return stripped.upper()
    hits = []
    for match in _OPTION_RE.finditer(text):
        letter = (match.group(1) or match.group(2)).upper()
        if letter in labels:
            hits.append(letter)
    if not hits:
        return None
    return hits[0] if first else hits[-1]


def _extract_boolean(text: str, first: bool) -> Optional[str]:
    hits = _YESNO_RE.findall(text)
    if not hits:
        return None
    token = (hits[0] if first else hits[-1]).lower()
    return "yes" if token in ("yes", "true") else "no"


def _extract_word(text: str, first: bool) -> Optional[str]:
    hits = _WORD_RE.findall(text)
    if not hits:
        return None
    return (hits[0] if first else hits[-1]).lower()


def _normalize(text: str, question: Question, first: bool) -> Optional[str]:
    """Pull one canonical answer out of text; first=True scans forward

    (used right after an anchor), first=False takes the last occurrence
    (used when falling back over the whole response).
    """
    if question.kind is TaskKind.NUMERIC:
        return _extract_numeric(text, first)
    if question.kind is TaskKind.MULTIPLE_CHOICE:
        return _extract_choice(text, question.labels, first)
    if question.kind is TaskKind.BOOLEAN:
        return _extract_boolean(text, first)
    return _extract_word(text, first)


def extract_answer(
    raw: str, question: Question, rule: ExtractionRule | None = None
) -> NormalizedAnswer:
    """Extract the final answer from a model response; sentinel on failure."""
    if rule is None:
        rule = ExtractionRule(kind=question.kind)
    lowered = raw.lower()
    anchor = rule.anchor_phrase.lower()
    at = lowered.rfind(anchor)
    canonical: Optional[str] = None
    if at >= 0:
        remainder = raw[at + len(anchor) :]
        canonical = _normalize(remainder, question, first=True)
    elif rule.fallback is Fallback.LAST_VALUE_IN_TEXT:
        canonical = _normalize(raw, question, first=False)
    if canonical is None:
        return NormalizedAnswer.sentinel(question.kind)
    return NormalizedAnswer(kind=question.kind, canonical=canonical)


def normalize_answer_input(text: str, question: Question) -> NormalizedAnswer:
    """Normalize a human-entered answer with the same rules used for model text.

    Wraps the input in the anchor phrase so only the direct-answer branch of
    the extractor applies (e.g. "1,200" -> "1200", "c" -> "C", "TRUE" -> "yes").
    """
    if not text.strip():
        return NormalizedAnswer.sentinel(question.kind)
    return extract_answer(f"{ANSWER_ANCHOR} {text.strip()}.", question)


def answers_equal(a: NormalizedAnswer, b: NormalizedAnswer) -> bool:
    """Canonical-form equality; all invalid answers of a kind are one bucket."""
    return a == b
