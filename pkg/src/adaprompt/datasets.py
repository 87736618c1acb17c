"""Dataset manifests and question-file loading.

A dataset is a manifest JSON naming a train and a test JSONL file (one
question object per line: id, question, kind, optional choices, optional
answer). Gold answers in question files are normalized with the same rules
applied to model output, so file authors may write "1,200" or "True" and get
the canonical form.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .domain import (
    DomainError,
    PoolRole,
    Question,
    QuestionPool,
    SchemaError,
    TaskKind,
    PRESET_K,
)
from .parsing import normalize_answer_input

MANIFEST_VERSION = 1


@dataclass(frozen=True, slots=True)
class DatasetManifest:
    name: str
    task_kind: TaskKind
    train_path: Path
    test_path: Path
    preset_k: int

    def __post_init__(self) -> None:
        if self.preset_k < 1:
            raise SchemaError(f"{self.name}: preset_k must be >= 1")
        for path in (self.train_path, self.test_path):
            if not path.exists():
                raise SchemaError(f"{self.name}: dataset file not found: {path}")


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"dataset manifest not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"dataset manifest is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or data.get("version") != MANIFEST_VERSION:
        raise SchemaError(f"unsupported dataset manifest version in {path}")
    try:
        name = str(data["name"])
        kind = TaskKind(data["task_kind"])
        train = (path.parent / str(data["train_path"])).resolve()
        test = (path.parent / str(data["test_path"])).resolve()
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"bad dataset manifest {path}: {exc}") from exc
    preset = data.get("preset_k", PRESET_K.get(name))
    if preset is None:
        raise SchemaError(f"{name}: manifest needs preset_k (no default known)")
    return DatasetManifest(
        name=name, task_kind=kind, train_path=train, test_path=test, preset_k=int(preset)
    )


def find_dataset(datasets_dir: str | Path, name: str) -> DatasetManifest:
    """Resolve a dataset name to <datasets_dir>/<name>.json."""
    manifest_path = Path(datasets_dir) / f"{name}.json"
    if not manifest_path.exists():
        raise SchemaError(f"unknown dataset {name!r}: no manifest at {manifest_path}")
    manifest = load_manifest(manifest_path)
    if manifest.name != name:
        raise SchemaError(
            f"manifest {manifest_path} names dataset {manifest.name!r}, expected {name!r}"
        )
    return manifest


def load_question_file(path: str | Path, role: PoolRole) -> QuestionPool:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"question file not found: {path}")
    questions = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise SchemaError(f"{path}:{line_no}: each line must be a JSON object")
        raw_answer = record.get("answer")
        question = Question.from_json_dict({**record, "answer": None})
        if raw_answer is not None:
            answer = normalize_answer_input(str(raw_answer), question)
            if not answer.valid:
                raise SchemaError(
                    f"{path}:{line_no}: gold answer {raw_answer!r} does not normalize"
                )
            question = dataclasses.replace(question, gold_answer=answer)
        questions.append(question)
    try:
        return QuestionPool(tuple(questions), role)
    except DomainError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def load_train_pool(manifest: DatasetManifest) -> QuestionPool:
    return load_question_file(manifest.train_path, PoolRole.TRAIN)


def load_test_pool(manifest: DatasetManifest) -> QuestionPool:
    return load_question_file(manifest.test_path, PoolRole.TEST)
