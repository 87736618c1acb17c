"""Model backends: an OpenAI-compatible HTTP adapter and deterministic mocks.

The HTTP adapter speaks the minimal chat-completions subset (model, messages,
temperature in; first choice's message content out) so any conforming server
works, and retries retryable failures with exponential backoff (base 1 s,
factor 2, at most 5 attempts). The scripted mock replays fixture-defined
responses keyed by the question asked and by which clusters the prompt's
exemplars already cover, which makes selection dynamics exactly reproducible
offline.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
import threading
import time
from collections import deque
from pathlib import Path
from typing import Any, Callable, Optional, Protocol

import requests

from .domain import SchemaError

ENV_BACKEND_URL = "AP_BACKEND_URL"
ENV_BACKEND_KEY = "AP_BACKEND_KEY"
ENV_BACKEND_MODEL = "AP_BACKEND_MODEL"

RETRY_BASE_SECONDS = 1.0
RETRY_FACTOR = 2.0
RETRY_MAX_ATTEMPTS = 5

_RETRYABLE_KINDS = {
    "network": True,
    "rate_limited": True,
    "server_error": True,
    "malformed_reply": False,
    "auth_failed": False,
}


class BackendError(Exception):
    """A typed model-backend failure; kind decides whether it is retried."""

    def __init__(self, kind: str, detail: str):
        if kind not in _RETRYABLE_KINDS:
            raise ValueError(f"unknown backend error kind: {kind}")
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.retryable = _RETRYABLE_KINDS[kind]
        self.detail = detail


class ModelBackend(Protocol):
    def complete(self, prompt: str, temperature: float, sample_index: int) -> str: ...

    def identity(self) -> str: ...


class EmbeddingBackend(Protocol):
    def embed(self, text: str) -> list[float]: ...

    def identity(self) -> str: ...


class RateLimiter:
    """Token bucket over a sliding minute; thread-safe, no-op when unlimited."""

    def __init__(self, requests_per_minute: Optional[int], clock: Callable[[], float] = time.monotonic):
        self.requests_per_minute = requests_per_minute
        self._clock = clock
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self, sleep: Callable[[float], None] = time.sleep) -> None:
        if not self.requests_per_minute:
            return
        while True:
            with self._lock:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.requests_per_minute:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            sleep(max(wait, 0.01))


def _with_retries(
    call: Callable[[], str], sleep: Callable[[float], None]
) -> str:
    for attempt in range(1, RETRY_MAX_ATTEMPTS + 1):
        try:
            return call()
        except BackendError as error:
            if not error.retryable or attempt == RETRY_MAX_ATTEMPTS:
                raise
            sleep(RETRY_BASE_SECONDS * RETRY_FACTOR ** (attempt - 1))
    raise AssertionError("unreachable")


class OpenAIChatBackend:
    """Chat-completions client for any OpenAI-compatible server."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
        requests_per_minute: Optional[int] = None,
        sleep: Callable[[float], None] = time.sleep,
        http: Optional[requests.Session] = None,
    ):
        if not base_url:
            raise ValueError("backend base URL must be non-empty")
        if not model:
            raise ValueError("backend model must be non-empty")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self._limiter = RateLimiter(requests_per_minute)
        self._sleep = sleep
        self._http = http or requests.Session()

    @classmethod
    def from_env(cls, environ: Optional[dict[str, str]] = None, **kwargs: Any) -> "OpenAIChatBackend":
        env = environ if environ is not None else os.environ
        url = env.get(ENV_BACKEND_URL, "")
        model = env.get(ENV_BACKEND_MODEL, "")
        if not url or not model:
            raise ValueError(
                f"live backend needs {ENV_BACKEND_URL} and {ENV_BACKEND_MODEL} set"
            )
        return cls(base_url=url, model=model, api_key=env.get(ENV_BACKEND_KEY), **kwargs)

    def identity(self) -> str:
        return f"openai-chat:{self.model}@{self.base_url}"

    def complete(self, prompt: str, temperature: float, sample_index: int) -> str:
        # sample_index only distinguishes cache keys; independent samples come
        # from temperature on the server side.
        del sample_index
        return _with_retries(lambda: self._request(prompt, temperature), self._sleep)

    def _request(self, prompt: str, temperature: float) -> str:
        self._limiter.acquire(self._sleep)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }
        try:
            response = self._http.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise BackendError("network", str(exc)) from exc
        if response.status_code in (401, 403):
            raise BackendError("auth_failed", f"status {response.status_code}")
        if response.status_code == 429:
            raise BackendError("rate_limited", "status 429")
        if response.status_code >= 500:
            raise BackendError("server_error", f"status {response.status_code}")
        if response.status_code != 200:
            raise BackendError(
                "malformed_reply", f"unexpected status {response.status_code}: {response.text[:200]}"
            )
        try:
            payload = response.json()
            content = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError("malformed_reply", f"bad response body: {exc}") from exc
        if not isinstance(content, str):
            raise BackendError("malformed_reply", "message content is not text")
        return content


class OpenAIEmbeddingBackend:
    """Embeddings client for the OpenAI-compatible embeddings route."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
        sleep: Callable[[float], None] = time.sleep,
        http: Optional[requests.Session] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self._sleep = sleep
        self._http = http or requests.Session()

    def identity(self) -> str:
        return f"openai-embeddings:{self.model}@{self.base_url}"

    def embed(self, text: str) -> list[float]:
        if not text:
            raise ValueError("cannot embed empty text")
        return json.loads(_with_retries(lambda: self._request(text), self._sleep))

    def _request(self, text: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self._http.post(
                f"{self.base_url}/embeddings",
                json={"model": self.model, "input": text},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise BackendError("network", str(exc)) from exc
        if response.status_code in (401, 403):
            raise BackendError("auth_failed", f"status {response.status_code}")
        if response.status_code == 429:
            raise BackendError("rate_limited", "status 429")
        if response.status_code >= 500:
            raise BackendError("server_error", f"status {response.status_code}")
        if response.status_code != 200:
            raise BackendError("malformed_reply", f"unexpected status {response.status_code}")
        try:
            vector = response.json()["data"][0]["embedding"]
            return json.dumps([float(x) for x in vector])
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError("malformed_reply", f"bad embeddings body: {exc}") from exc


# ---------------------------------------------------------------------------
# Deterministic mocks


MOCK_FIXTURE_VERSION = 1


class ScriptedMockBackend:
    """Deterministic fake model driven by a JSON fixture.

    Fixture schema (version 1):

        {
          "version": 1,
          "identity": "scripted-mock:<name>",
          "default_response": "...",
          "questions": {"<id>": {"text": "...", "cluster": "<cluster-id>"}, ...},
          "rules": {"<id>": {"uncovered": ["...", ...], "covered": ["...", ...]}, ...}
        }

    complete() reads the final "Q:" block of the prompt to find which question
    is being asked and the earlier "Q:" blocks to find which exemplars are in
    the prompt. A question counts as *covered* when any exemplar shares its
    cluster. The scripted list for (question, covered?) is replayed cyclically
    by sample index; anything unscripted falls back to default_response.
    Equal (prompt, sample_index) always produce equal output.
    """

    def __init__(self, fixture: dict[str, Any], name: str = "fixture"):
        if fixture.get("version") != MOCK_FIXTURE_VERSION:
            raise SchemaError(f"unsupported mock fixture version: {fixture.get('version')!r}")
        self._identity = str(fixture.get("identity") or f"scripted-mock:{name}")
        self.default_response = str(fixture.get("default_response", ""))
        questions = fixture.get("questions")
        rules = fixture.get("rules")
        if not isinstance(questions, dict) or not isinstance(rules, dict):
            raise SchemaError("mock fixture needs 'questions' and 'rules' objects")
        self.cluster_of = {qid: str(entry["cluster"]) for qid, entry in questions.items()}
        self.id_of_text = {str(entry["text"]): qid for qid, entry in questions.items()}
        if len(self.id_of_text) != len(questions):
            raise SchemaError("mock fixture question texts must be unique")
        self.rules: dict[str, dict[str, list[str]]] = {}
        for qid, rule in rules.items():
            self.rules[qid] = {
                "uncovered": [str(r) for r in rule.get("uncovered", [])],
                "covered": [str(r) for r in rule.get("covered", [])],
            }
        self.calls = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedMockBackend":
        path = Path(path)
        try:
            fixture = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise SchemaError(f"mock fixture not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"mock fixture is not valid JSON: {exc}") from exc
        return cls(fixture, name=path.stem)

    def identity(self) -> str:
        return self._identity

    def _question_texts(self, prompt: str) -> list[str]:
        texts = []
        for line in prompt.split("\n"):
            if line.startswith("Q: "):
                texts.append(line[len("Q: ") :])
        return texts

    def complete(self, prompt: str, temperature: float, sample_index: int) -> str:
        del temperature
        with self._lock:
            self.calls += 1
        texts = self._question_texts(prompt)
        if not texts:
            return self.default_response
        target_id = self.id_of_text.get(texts[-1])
        if target_id is None or target_id not in self.rules:
            return self.default_response
        covered_clusters = {
            self.cluster_of[qid]
            for text in texts[:-1]
            if (qid := self.id_of_text.get(text)) is not None
        }
        target_cluster = self.cluster_of.get(target_id)
        branch = "covered" if target_cluster in covered_clusters else "uncovered"
        responses = self.rules[target_id][branch]
        if not responses:
            return self.default_response
        return responses[sample_index % len(responses)]


class HashEmbedder:
    """Deterministic mock embedder: sha256 bytes mapped to [-1, 1] floats.

    Dimension i reads bytes 4i..4i+3 of sha256(text) (recycling the digest as
    needed) as a big-endian unsigned 32-bit integer n and emits
    n / (2**32 - 1) * 2 - 1. Stable across runs and platforms.
    """

    def __init__(self, dim: int = 8):
        if dim < 1:
            raise ValueError("embedding dimension must be >= 1")
        self.dim = dim

    def identity(self) -> str:
        return f"hash-embedder:d{self.dim}"

    def embed(self, text: str) -> list[float]:
        if not text:
            raise ValueError("cannot embed empty text")
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        needed = 4 * self.dim
        material = (digest * (needed // len(digest) + 1))[:needed]
        vector = []
        for i in range(self.dim):
            (n,) = struct.unpack(">I", material[4 * i : 4 * i + 4])
            vector.append(n / (2**32 - 1) * 2 - 1)
        return vector


class ScriptedEmbedder:
    """Embedder replaying fixed vectors from a fixture, keyed by exact text.

    Fixture schema (version 1):
        {"version": 1, "identity": "...", "dim": 2, "vectors": {"<text>": [x, y], ...}}
    """

    def __init__(self, fixture: dict[str, Any], name: str = "fixture"):
        if fixture.get("version") != MOCK_FIXTURE_VERSION:
            raise SchemaError(
                f"unsupported embedder fixture version: {fixture.get('version')!r}"
            )
        self._identity = str(fixture.get("identity") or f"scripted-embedder:{name}")
        self.dim = int(fixture["dim"])
        self.vectors = {
            str(text): [float(x) for x in vec] for text, vec in fixture["vectors"].items()
        }
        for text, vec in self.vectors.items():
            if len(vec) != self.dim:
                raise SchemaError(f"embedder fixture vector for {text!r} has wrong dimension")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedEmbedder":
        path = Path(path)
        try:
            fixture = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise SchemaError(f"embedder fixture not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"embedder fixture is not valid JSON: {exc}") from exc
        return cls(fixture, name=path.stem)

    def identity(self) -> str:
        return self._identity

    def embed(self, text: str) -> list[float]:
        if text not in self.vectors:
            raise BackendError("malformed_reply", f"no scripted embedding for text: {text!r}")
        return list(self.vectors[text])


def cosine_similarity(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm = math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b))
    return dot / norm if norm else 0.0
