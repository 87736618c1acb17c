"""Dataset manifest resolution and question-file loading."""

from __future__ import annotations

import json

import pytest

from adaprompt.datasets import (
    find_dataset,
    load_manifest,
    load_question_file,
    load_test_pool,
    load_train_pool,
)
from adaprompt.domain import PRESET_K, PoolRole, SchemaError, TaskKind

from conftest import DATASETS


def write_dataset(tmp_path, name="toy", manifest_overrides=None, train=None, test=None):
    train_lines = train if train is not None else [
        {"id": "a1", "question": "What is 1 + 1?", "kind": "numeric", "answer": "2"},
        {"id": "a2", "question": "What is 2 + 2?", "kind": "numeric"},
    ]
    test_lines = test if test is not None else [
        {"id": "z1", "question": "What is 3 + 3?", "kind": "numeric", "answer": "6"},
    ]
    (tmp_path / name).mkdir(exist_ok=True)
    train_path = tmp_path / name / "train.jsonl"
    test_path = tmp_path / name / "test.jsonl"
    train_path.write_text(
        "\n".join(json.dumps(line) if isinstance(line, dict) else line for line in train_lines),
        encoding="utf-8",
    )
    test_path.write_text(
        "\n".join(json.dumps(line) if isinstance(line, dict) else line for line in test_lines),
        encoding="utf-8",
    )
    manifest = {
        "version": 1,
        "name": name,
        "task_kind": "numeric",
        "train_path": f"{name}/train.jsonl",
        "test_path": f"{name}/test.jsonl",
        "preset_k": 4,
    }
    manifest.update(manifest_overrides or {})
    manifest_path = tmp_path / f"{name}.json"
    manifest_path.write_text(json.dumps(manifest), encoding="utf-8")
    return manifest_path


class TestManifest:
    def test_loads_and_resolves_relative_paths(self, tmp_path):
        manifest = load_manifest(write_dataset(tmp_path))
        assert manifest.name == "toy"
        assert manifest.task_kind is TaskKind.NUMERIC
        assert manifest.preset_k == 4
        assert manifest.train_path.is_absolute() and manifest.train_path.exists()

    def test_known_names_fall_back_to_preset_budgets(self, tmp_path):
        name, preset = next(iter(PRESET_K.items()))
        path = write_dataset(tmp_path, name=name, manifest_overrides={"preset_k": None})
        manifest_data = json.loads(path.read_text())
        del manifest_data["preset_k"]
        path.write_text(json.dumps(manifest_data))
        assert load_manifest(path).preset_k == preset

    def test_unknown_name_without_preset_rejected(self, tmp_path):
        path = write_dataset(tmp_path)
        manifest_data = json.loads(path.read_text())
        del manifest_data["preset_k"]
        path.write_text(json.dumps(manifest_data))
        with pytest.raises(SchemaError, match="preset_k"):
            load_manifest(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(SchemaError, match="not found"):
            load_manifest(tmp_path / "absent.json")

    def test_bad_json_rejected(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(SchemaError, match="JSON"):
            load_manifest(path)

    def test_wrong_version_rejected(self, tmp_path):
        path = write_dataset(tmp_path, manifest_overrides={"version": 2})
        with pytest.raises(SchemaError, match="version"):
            load_manifest(path)

    def test_unknown_task_kind_rejected(self, tmp_path):
        path = write_dataset(tmp_path, manifest_overrides={"task_kind": "riddle"})
        with pytest.raises(SchemaError):
            load_manifest(path)

    def test_dangling_question_file_rejected(self, tmp_path):
        path = write_dataset(
            tmp_path, manifest_overrides={"train_path": "toy/absent.jsonl"}
        )
        with pytest.raises(SchemaError, match="not found"):
            load_manifest(path)


class TestFindDataset:
    def test_resolves_by_name(self, tmp_path):
        write_dataset(tmp_path)
        assert find_dataset(tmp_path, "toy").name == "toy"

    def test_unknown_name_rejected(self, tmp_path):
        with pytest.raises(SchemaError, match="unknown dataset"):
            find_dataset(tmp_path, "ghost")

    def test_name_mismatch_rejected(self, tmp_path):
        write_dataset(tmp_path, manifest_overrides={"name": "impostor"})
        with pytest.raises(SchemaError, match="impostor"):
            find_dataset(tmp_path, "toy")

    def test_shipped_datasets_load(self):
        for name in ("mock5", "mini20"):
            manifest = find_dataset(DATASETS, name)
            train = load_train_pool(manifest)
            test = load_test_pool(manifest)
            assert len(train) > 0 and len(test) > 0
            assert all(q.gold_answer is not None for q in test.questions)


class TestQuestionFiles:
    def test_gold_answers_are_normalized(self, tmp_path):
        path = tmp_path / "train.jsonl"
        path.write_text(
            json.dumps(
                {
                    "id": "n1",
                    "question": "Population?",
                    "kind": "numeric",
                    "answer": "1,200",
                }
            ),
            encoding="utf-8",
        )
        pool = load_question_file(path, PoolRole.TRAIN)
        assert pool.by_id("n1").gold_answer.canonical == "1200"

    def test_unnormalizable_gold_rejected(self, tmp_path):
        path = tmp_path / "train.jsonl"
        path.write_text(
            json.dumps(
                {
                    "id": "n1",
                    "question": "Population?",
                    "kind": "numeric",
                    "answer": "lots",
                }
            ),
            encoding="utf-8",
        )
        with pytest.raises(SchemaError, match="does not normalize"):
            load_question_file(path, PoolRole.TRAIN)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "train.jsonl"
        path.write_text(
            "\n"
            + json.dumps({"id": "n1", "question": "One?", "kind": "numeric"})
            + "\n\n"
            + json.dumps({"id": "n2", "question": "Two?", "kind": "numeric"})
            + "\n",
            encoding="utf-8",
        )
        assert len(load_question_file(path, PoolRole.TRAIN)) == 2

    def test_invalid_json_line_reports_position(self, tmp_path):
        path = tmp_path / "train.jsonl"
        path.write_text(
            json.dumps({"id": "n1", "question": "One?", "kind": "numeric"})
            + "\n{oops",
            encoding="utf-8",
        )
        with pytest.raises(SchemaError, match=":2"):
            load_question_file(path, PoolRole.TRAIN)

    def test_non_object_line_rejected(self, tmp_path):
        path = tmp_path / "train.jsonl"
        path.write_text('["not", "an", "object"]', encoding="utf-8")
        with pytest.raises(SchemaError, match="object"):
            load_question_file(path, PoolRole.TRAIN)

    def test_duplicate_ids_rejected(self, tmp_path):
        row = {"id": "n1", "question": "One?", "kind": "numeric"}
        other = {"id": "n1", "question": "Other one?", "kind": "numeric"}
        path = tmp_path / "train.jsonl"
        path.write_text(
            json.dumps(row) + "\n" + json.dumps(other), encoding="utf-8"
        )
        with pytest.raises(SchemaError):
            load_question_file(path, PoolRole.TRAIN)

    def test_test_role_requires_gold_everywhere(self, tmp_path):
        path = tmp_path / "test.jsonl"
        path.write_text(
            json.dumps({"id": "t1", "question": "One?", "kind": "numeric"}),
            encoding="utf-8",
        )
        with pytest.raises(SchemaError):
            load_question_file(path, PoolRole.TEST)

    def test_multiple_choice_round_trip(self, tmp_path):
        path = tmp_path / "train.jsonl"
        path.write_text(
            json.dumps(
                {
                    "id": "m1",
                    "question": "Pick one.",
                    "kind": "multiple_choice",
                    "choices": ["red", "blue"],
                    "answer": "(b)",
                }
            ),
            encoding="utf-8",
        )
        question = load_question_file(path, PoolRole.TRAIN).by_id("m1")
        assert question.choices == (("A", "red"), ("B", "blue"))
        assert question.gold_answer.canonical == "B"
