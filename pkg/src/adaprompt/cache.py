"""Content-addressed response cache: one file per (backend, prompt, temperature, sample).

Keys embed the hash algorithm name so the scheme can migrate later. Writes are
create-exclusive: the first writer wins and concurrent duplicate fetches are
harmless. Exemplar-set dependence needs no explicit key component because the
rendered prompt (and therefore its hash) already encodes the exemplars.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path
from typing import Optional, Protocol


class CompletionBackend(Protocol):
    def complete(self, prompt: str, temperature: float, sample_index: int) -> str: ...

    def identity(self) -> str: ...


def prompt_hash(prompt: str) -> str:
    return "sha256:" + hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ResponseCache:
    """Directory of raw response texts, addressed by hashed request keys."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(backend_identity: str, hashed_prompt: str, temperature: float, sample_index: int) -> str:
        material = "\n".join(
            [backend_identity, hashed_prompt, repr(float(temperature)), str(sample_index)]
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.txt"

    def get(
        self,
        backend_identity: str,
        hashed_prompt: str,
        temperature: float,
        sample_index: int,
    ) -> Optional[str]:
        path = self._path(self.key(backend_identity, hashed_prompt, temperature, sample_index))
        try:
            return path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None

    def put(
        self,
        backend_identity: str,
        hashed_prompt: str,
        temperature: float,
        sample_index: int,
        text: str,
    ) -> str:
        """Store once; later writes for the same key keep the original text."""
        path = self._path(self.key(backend_identity, hashed_prompt, temperature, sample_index))
        try:
            fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_EXCL)
        except FileExistsError:
            return path.read_text(encoding="utf-8")
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        return text


def cache_get_or_fetch(
    cache: Optional[ResponseCache],
    backend: CompletionBackend,
    prompt: str,
    temperature: float,
    sample_index: int,
) -> str:
    """Return the cached response for this request, fetching and storing on miss."""
    if cache is None:
        return backend.complete(prompt, temperature, sample_index)
    identity = backend.identity()
    hashed = prompt_hash(prompt)
    hit = cache.get(identity, hashed, temperature, sample_index)
    if hit is not None:
        return hit
    text = backend.complete(prompt, temperature, sample_index)
    return cache.put(identity, hashed, temperature, sample_index, text)
