"""Shared fixtures and the acceptance-criteria terminal summary."""

from __future__ import annotations

from pathlib import Path

import pytest

from adaprompt.backends import ScriptedEmbedder, ScriptedMockBackend
from adaprompt.datasets import find_dataset, load_test_pool, load_train_pool
from adaprompt.domain import Metric, SessionConfig, Strategy
from adaprompt.selection import resume_or_create_session, run_strategy, stub_annotator
from adaprompt.session import SessionStore

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES = REPO_ROOT / "tests" / "fixtures"
DATASETS = REPO_ROOT / "datasets"


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def datasets_dir() -> Path:
    return DATASETS


@pytest.fixture
def mock5_backend():
    """Factory: a fresh scripted mock (fresh call counter) per use."""

    def make() -> ScriptedMockBackend:
        return ScriptedMockBackend.from_file(FIXTURES / "mock5_backend.json")

    return make


@pytest.fixture(scope="session")
def mock5_data():
    manifest = find_dataset(DATASETS, "mock5")
    return manifest, load_train_pool(manifest), load_test_pool(manifest)


@pytest.fixture(scope="session")
def redundancy_data():
    manifest = find_dataset(FIXTURES / "datasets", "redundancy")
    return manifest, load_train_pool(manifest), load_test_pool(manifest)


@pytest.fixture(scope="session")
def geometry_data():
    manifest = find_dataset(FIXTURES / "datasets", "geometry")
    return manifest, load_train_pool(manifest), load_test_pool(manifest)


@pytest.fixture
def geometry_embedder():
    return ScriptedEmbedder.from_file(FIXTURES / "geometry_embedder.json")


@pytest.fixture
def select_on_mock5(tmp_path, mock5_backend, mock5_data):
    """Run a full selection on mock5 and hand back every moving part."""

    def run(
        strategy: Strategy,
        k: int = 5,
        metric: Metric = Metric.ENTROPY,
        seed: int = 0,
        subdir: str = "select",
    ):
        _, pool, _ = mock5_data
        backend = mock5_backend()
        config = SessionConfig(budget_k=k, metric=metric, strategy=strategy, seed=seed)
        store = SessionStore(tmp_path / subdir)
        session = resume_or_create_session(store, "mock5", config, pool)
        exemplar_set = run_strategy(
            store, session, backend=backend, annotator=stub_annotator()
        )
        return store, session, exemplar_set, backend

    return run


def mock5_cluster(question_id: str) -> int:
    """Cluster number baked into mock5 ids: q01-q10 -> 1, ..., q41-q50 -> 5."""
    return (int(question_id[1:]) - 1) // 10 + 1


# ---------------------------------------------------------------------------
# Acceptance summary: one PASS/FAIL line per criterion at the end of the run.

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance_results[name] = "PASS" if report.outcome == "passed" else "FAIL"
    elif report.when == "setup" and report.outcome == "skipped":
        _acceptance_results[name] = "SKIP"
    elif report.when == "setup" and report.outcome == "failed":
        _acceptance_results[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_acceptance_results):
        terminalreporter.write_line(f"{_acceptance_results[name]}  {name}")
