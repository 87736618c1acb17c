"""Command-line interface: exit codes, settings precedence, output files."""

from __future__ import annotations

import io
import json
import socket
import subprocess
import sys
import time
import urllib.error
import urllib.request

import pytest

from adaprompt.cli import (
    EXIT_ABORTED,
    EXIT_BACKEND,
    EXIT_DATA,
    EXIT_OK,
    interactive_annotator,
    main,
)
from adaprompt.domain import TaskKind
from adaprompt.session import AnnotationRequest, SessionStore

from conftest import DATASETS, FIXTURES, REPO_ROOT
from test_domain import make_question

GOLDENS = REPO_ROOT / "tests" / "goldens" / "mock5"
MOCK_BACKEND = f"mock:{FIXTURES / 'mock5_backend.json'}"


def select_args(out_dir, **overrides):
    options = {
        "dataset": "mock5",
        "datasets-dir": str(DATASETS),
        "strategy": "adaptive",
        "metric": "entropy",
        "backend": MOCK_BACKEND,
        "annotator": "stub",
        "seed": "0",
        "out": str(out_dir),
    }
    options.update(overrides)
    args = ["select"]
    for name, value in options.items():
        if value is not None:
            args.extend([f"--{name}", str(value)])
    return args


class TestExitCodes:
    def test_missing_required_flag_is_a_usage_error(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["select", "--dataset", "mock5"])  # no --out
        assert exc_info.value.code == 2

    def test_unknown_subcommand_is_a_usage_error(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["frobnicate"])
        assert exc_info.value.code == 2

    def test_live_backend_without_credentials_exits_3(self, tmp_path, monkeypatch):
        monkeypatch.delenv("AP_BACKEND_URL", raising=False)
        monkeypatch.delenv("AP_BACKEND_MODEL", raising=False)
        code = main(select_args(tmp_path / "out", **{"backend": "openai"}))
        assert code == EXIT_BACKEND

    def test_unknown_dataset_exits_4(self, tmp_path):
        code = main(select_args(tmp_path / "out", dataset="ghost"))
        assert code == EXIT_DATA

    def test_missing_exemplar_file_exits_4(self, tmp_path):
        code = main(
            [
                "evaluate",
                "--exemplars",
                str(tmp_path / "absent.json"),
                "--test",
                str(DATASETS / "mock5" / "test.jsonl"),
                "--backend",
                MOCK_BACKEND,
                "--out",
                str(tmp_path / "eval"),
            ]
        )
        assert code == EXIT_DATA

    def test_quitting_the_interactive_annotator_exits_5(self, tmp_path):
        result = subprocess.run(
            [
                sys.executable,
                "-m",
                "adaprompt.cli",
                *select_args(
                    tmp_path / "out", annotator="interactive", **{"k": "1", "l": "2"}
                ),
            ],
            cwd=REPO_ROOT,
            stdin=subprocess.DEVNULL,
            capture_output=True,
            text=True,
            timeout=60,
        )
        assert result.returncode == EXIT_ABORTED
        assert "aborted" in result.stderr
        # the parked session is still there for a resume
        assert SessionStore(tmp_path / "out").exists()


class TestInteractiveAnnotator:
    def request(self):
        question = make_question("q1")
        return AnnotationRequest(round=1, question=question)

    def test_reads_rationale_then_answer(self):
        out = io.StringIO()
        annotate = interactive_annotator(
            "cli", in_stream=io.StringIO("Summed the parts.\n42\n"), out=out
        )
        reply = annotate(self.request())
        assert reply.rationale == "Summed the parts."
        assert reply.answer.canonical == "42"
        assert reply.annotator_id == "cli"

    def test_retries_unparseable_answers(self):
        out = io.StringIO()
        annotate = interactive_annotator(
            "cli", in_stream=io.StringIO("Reasoned.\nno idea\n42\n"), out=out
        )
        reply = annotate(self.request())
        assert reply.answer.canonical == "42"
        assert "could not parse" in out.getvalue()

    def test_empty_rationale_aborts(self):
        from adaprompt.selection import AnnotationAborted

        annotate = interactive_annotator(
            "cli", in_stream=io.StringIO("\n"), out=io.StringIO()
        )
        with pytest.raises(AnnotationAborted):
            annotate(self.request())

    def test_choices_and_score_report_are_shown(self):
        from adaprompt.uncertainty import report_from_samples

        question = make_question(
            "m1",
            kind=TaskKind.MULTIPLE_CHOICE,
            choices=(("A", "red"), ("B", "blue")),
        )
        report = report_from_samples(
            question, None, ["The answer is (A).", "The answer is (B)."]
        )
        out = io.StringIO()
        annotate = interactive_annotator(
            "cli", in_stream=io.StringIO("Looked closely.\nA\n"), out=out
        )
        reply = annotate(AnnotationRequest(round=2, question=question, report=report))
        assert reply.answer.canonical == "A"
        shown = out.getvalue()
        assert "(A) red" in shown and "(B) blue" in shown
        assert "Sampled answers" in shown
        assert "disagreement 1.000" in shown


class TestScoreCommand:
    def test_table_matches_the_selection_audit(self, tmp_path, capsys):
        csv_path = tmp_path / "scores.csv"
        code = main(
            [
                "score",
                "--dataset",
                "mock5",
                "--datasets-dir",
                str(DATASETS),
                "--backend",
                MOCK_BACKEND,
                "--out",
                str(csv_path),
            ]
        )
        assert code == EXIT_OK
        stdout = capsys.readouterr().out
        lines = [line for line in stdout.splitlines() if "\t" in line]
        assert lines[0] == "question_id\tdisagreement\tentropy"
        assert len(lines) == 51  # header + full pool

        audit_round_1 = json.loads(
            GOLDENS.joinpath("audit.jsonl").read_text().splitlines()[0]
        )
        expected = {qid: (d, e) for qid, d, e in audit_round_1["scored"]}
        rows = csv_path.read_text().splitlines()
        assert rows[0] == "question_id,disagreement,entropy"
        assert len(rows) == 51
        for row in rows[1:]:
            qid, disagreement, entropy = row.split(",")
            assert (float(disagreement), float(entropy)) == expected[qid]
        assert [row.split(",")[0] for row in rows[1:]] == list(expected)


class TestSettingsPrecedence:
    def test_config_file_fills_unset_flags(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps({"k": 2, "l": 4, "backend": MOCK_BACKEND, "seed": 3}),
            encoding="utf-8",
        )
        out_dir = tmp_path / "out"
        code = main(
            select_args(
                out_dir,
                backend=None,
                seed=None,
                **{"config": str(config_path)},
            )
        )
        assert code == EXIT_OK
        session = SessionStore(out_dir).load()
        assert session.config.budget_k == 2
        assert session.config.samples_l == 4
        assert session.config.seed == 3

    def test_explicit_flags_beat_the_config_file(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"k": 2, "seed": 3}), encoding="utf-8")
        out_dir = tmp_path / "out"
        code = main(
            select_args(
                out_dir,
                seed="0",
                **{"config": str(config_path), "k": "1", "l": "2"},
            )
        )
        assert code == EXIT_OK
        session = SessionStore(out_dir).load()
        assert session.config.budget_k == 1
        assert session.config.seed == 0

    def test_preset_budget_used_when_nothing_is_given(self, tmp_path):
        out_dir = tmp_path / "out"
        assert main(select_args(out_dir, **{"l": "2"})) == EXIT_OK
        session = SessionStore(out_dir).load()
        assert session.config.budget_k == 5  # the dataset manifest's preset


class TestSelectOutputs:
    def test_budget_one_files_are_strategy_agnostic(self, tmp_path):
        adaptive_dir = tmp_path / "adaptive"
        active_dir = tmp_path / "active"
        assert main(select_args(adaptive_dir, **{"k": "1"})) == EXIT_OK
        assert (
            main(select_args(active_dir, strategy="active", **{"k": "1"})) == EXIT_OK
        )
        adaptive_bytes = (adaptive_dir / "exemplars.json").read_bytes()
        assert adaptive_bytes == (active_dir / "exemplars.json").read_bytes()
        assert b'"strategy": "active"' in adaptive_bytes

    def test_fixed_strategy_re_emits_the_input_file(self, tmp_path):
        out_dir = tmp_path / "out"
        code = main(
            [
                "select",
                "--dataset",
                "mock5",
                "--datasets-dir",
                str(DATASETS),
                "--strategy",
                "fixed",
                "--exemplars",
                str(GOLDENS / "exemplars.json"),
                "--out",
                str(out_dir),
            ]
        )
        assert code == EXIT_OK
        assert (out_dir / "exemplars.json").read_bytes() == (
            GOLDENS / "exemplars.json"
        ).read_bytes()

    def test_fixed_strategy_requires_an_input_file(self, tmp_path):
        code = main(select_args(tmp_path / "out", strategy="fixed"))
        assert code == EXIT_DATA

    def test_evaluate_prints_the_accuracy_summary(self, tmp_path, capsys):
        code = main(
            [
                "evaluate",
                "--exemplars",
                str(GOLDENS / "exemplars.json"),
                "--test",
                str(DATASETS / "mock5" / "test.jsonl"),
                "--backend",
                MOCK_BACKEND,
                "--out",
                str(tmp_path / "eval"),
            ]
        )
        assert code == EXIT_OK
        stdout = capsys.readouterr().out
        assert "exemplars: mock5/adaptive (5)" in stdout
        assert "accuracy 1.000" in stdout
        assert (tmp_path / "eval" / "eval.json").exists()
        assert (tmp_path / "eval" / "eval.csv").exists()


class TestSweep:
    def test_sweep_selects_and_evaluates_each_budget(self, tmp_path, capsys):
        out_dir = tmp_path / "sweep"
        code = main(
            [
                "sweep-k",
                "--dataset",
                "mock5",
                "--datasets-dir",
                str(DATASETS),
                "--k-list",
                "1,2",
                "--backend",
                MOCK_BACKEND,
                "--out",
                str(out_dir),
            ]
        )
        assert code == EXIT_OK
        rows = (out_dir / "sweep.csv").read_text().splitlines()
        assert rows[0] == "k,strategy,accuracy"
        parsed = [row.split(",") for row in rows[1:]]
        assert [(int(k), s) for k, s, _ in parsed] == [(1, "adaptive"), (2, "adaptive")]
        # one covered cluster per exemplar, two test questions per cluster
        assert float(parsed[0][2]) == pytest.approx(0.2)
        assert float(parsed[1][2]) == pytest.approx(0.4)
        for k in (1, 2):
            assert (out_dir / f"k{k}" / "select" / "exemplars.json").exists()
            assert (out_dir / f"k{k}" / "eval" / "eval.json").exists()

    def test_bad_k_list_exits_4(self, tmp_path):
        code = main(
            [
                "sweep-k",
                "--dataset",
                "mock5",
                "--datasets-dir",
                str(DATASETS),
                "--k-list",
                "one,two",
                "--backend",
                MOCK_BACKEND,
                "--out",
                str(tmp_path / "sweep"),
            ]
        )
        assert code == EXIT_DATA


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def http_json(url, payload=None, timeout=5):
    data = json.dumps(payload).encode() if payload is not None else None
    request = urllib.request.Request(
        url, data=data, headers={"Content-Type": "application/json"}
    )
    with urllib.request.urlopen(request, timeout=timeout) as response:
        return json.loads(response.read())


class TestHttpModes:
    def test_serve_answers_requests(self, tmp_path):
        port = free_port()
        process = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "adaprompt.cli",
                "serve",
                "--session-dir",
                str(tmp_path / "sessions"),
                "--datasets-dir",
                str(DATASETS),
                "--backend",
                MOCK_BACKEND,
                "--port",
                str(port),
            ],
            cwd=REPO_ROOT,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
        )
        try:
            listing = self.poll(f"http://127.0.0.1:{port}/sessions")
            assert listing == {"sessions": []}
        finally:
            process.terminate()
            process.wait(timeout=10)

    def test_select_with_http_annotator_round_trip(self, tmp_path):
        port = free_port()
        out_dir = tmp_path / "out"
        process = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "adaprompt.cli",
                *select_args(
                    out_dir,
                    annotator="http",
                    **{"k": "1", "l": "2", "port": str(port)},
                ),
            ],
            cwd=REPO_ROOT,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
        )
        try:
            base = f"http://127.0.0.1:{port}"
            session_id = "mock5-adaptive-entropy-k1-seed0"
            pending = self.poll(f"{base}/sessions/{session_id}/pending")
            reply = http_json(
                f"{base}/sessions/{session_id}/annotations",
                {
                    "questionId": pending["question"]["id"],
                    "rationale": "Annotated over HTTP.",
                    "answer": "2",
                    "annotatorId": "browser",
                },
            )
            assert reply["alreadyCommitted"] is False
            assert process.wait(timeout=30) == EXIT_OK
        finally:
            if process.poll() is None:
                process.terminate()
                process.wait(timeout=10)
        exemplars = json.loads((out_dir / "exemplars.json").read_text())
        assert exemplars["strategy"] == "active"  # budget-one label
        assert exemplars["exemplars"][0]["provenance"]["annotator_id"] == "browser"

    @staticmethod
    def poll(url, timeout=20.0):
        deadline = time.monotonic() + timeout
        last_error = None
        while time.monotonic() < deadline:
            try:
                return http_json(url, timeout=2)
            except (urllib.error.URLError, ConnectionError, TimeoutError) as exc:
                last_error = exc
                time.sleep(0.1)
        raise AssertionError(f"no response from {url}: {last_error}")
