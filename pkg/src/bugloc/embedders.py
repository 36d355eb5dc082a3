"""Embedding providers behind one interface.

HashingEmbedder is the deterministic in-process provider used by tests and
offline runs; RemoteEmbedder talks to an HTTPS batch endpoint; CachedEmbedder
wraps any provider with a persistent (provider_id, content-hash) cache so
re-runs cost zero provider calls.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from pathlib import Path

import numpy as np
import requests

from .ioutil import atomic_write_text
from .tokens import tokenize

logger = logging.getLogger(__name__)


class EmbeddingProviderError(Exception):
    pass


class RetriableProviderError(EmbeddingProviderError):
    """Transport-level failure that persisted across retry attempts."""

    def __init__(self, provider_id: str, attempts: int, cause: str):
        super().__init__(f"provider {provider_id!r} failed after {attempts} attempt(s): {cause}")
        self.provider_id = provider_id
        self.attempts = attempts


class ProviderContractError(EmbeddingProviderError):
    """Provider returned something that violates its declared contract."""


class EmbeddingProvider:
    provider_id: str = ""
    dimension: int = 0
    max_batch_size: int = 64

    def embed_batch(self, texts: list[str]) -> list[tuple[float, ...]]:
        """Accepts any number of texts; implementations slice into transport
        batches themselves."""
        raise NotImplementedError

    def embed(self, text: str) -> tuple[float, ...]:
        return self.embed_batch([text])[0]


class HashingEmbedder(EmbeddingProvider):
    """Signed token-hashing bag-of-words embedder.

    Identical text always yields a bitwise-identical vector: token buckets and
    signs come from MD5, never from Python's salted hash().
    """

    def __init__(self, dimension: int = 64):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self.provider_id = f"hashing-{dimension}"

    def _bucket(self, token: str) -> tuple[int, float]:
        digest = hashlib.md5(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:4], "big") % self.dimension
        sign = 1.0 if digest[4] & 1 else -1.0
        return bucket, sign

    def embed_batch(self, texts: list[str]) -> list[tuple[float, ...]]:
        out = []
        for text in texts:
            vec = np.zeros(self.dimension, dtype=np.float64)
            for token in tokenize(text):
                bucket, sign = self._bucket(token.lower())
                vec[bucket] += sign
            norm = float(np.linalg.norm(vec))
            if norm > 0.0:
                vec /= norm
            out.append(tuple(float(x) for x in vec))
        return out


class RemoteEmbedder(EmbeddingProvider):
    """HTTPS batch embedding endpoint (request: list of texts; response: list
    of float vectors). The API key comes from an environment variable and is
    checked at construction so misconfiguration fails before any work."""

    def __init__(
        self,
        model: str,
        dimension: int,
        base_url: str,
        api_key_env: str = "BUGLOC_EMBED_API_KEY",
        max_batch_size: int = 64,
        max_attempts: int = 3,
        timeout: float = 60.0,
        session: requests.Session | None = None,
        retry_delay: float = 1.0,
    ):
        api_key = os.environ.get(api_key_env, "")
        if not api_key:
            from .code_index import ConfigurationError

            raise ConfigurationError(
                f"environment variable {api_key_env} is not set for embedding provider {model!r}"
            )
        self.model = model
        self.dimension = dimension
        self.base_url = base_url.rstrip("/")
        self.max_batch_size = max_batch_size
        self.max_attempts = max_attempts
        self.timeout = timeout
        self.retry_delay = retry_delay
        self.provider_id = f"remote:{model}"
        self._session = session or requests.Session()
        self._session.headers["Authorization"] = f"Bearer {api_key}"

    def embed_batch(self, texts: list[str]) -> list[tuple[float, ...]]:
        out: list[tuple[float, ...]] = []
        for start in range(0, len(texts), self.max_batch_size):
            out.extend(self._post_batch(texts[start : start + self.max_batch_size]))
        return out

    def _post_batch(self, texts: list[str]) -> list[tuple[float, ...]]:
        payload = {"model": self.model, "input": texts}
        last_error = "unknown"
        for attempt in range(1, self.max_attempts + 1):
            try:
                response = self._session.post(
                    f"{self.base_url}/embeddings", json=payload, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = str(exc)
            else:
                if response.status_code == 200:
                    return self._parse(response.json(), expected=len(texts))
                if response.status_code in (408, 409, 429) or response.status_code >= 500:
                    last_error = f"HTTP {response.status_code}"
                else:
                    raise ProviderContractError(
                        f"provider {self.provider_id} rejected request: HTTP {response.status_code}"
                    )
            if attempt < self.max_attempts:
                time.sleep(self.retry_delay * attempt)
        raise RetriableProviderError(self.provider_id, self.max_attempts, last_error)

    def _parse(self, body, expected: int) -> list[tuple[float, ...]]:
        try:
            rows = body["data"]
            vectors = [tuple(float(x) for x in row["embedding"]) for row in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderContractError(f"malformed embedding response: {exc}") from None
        if len(vectors) != expected:
            raise ProviderContractError(
                f"provider returned {len(vectors)} vectors for {expected} inputs"
            )
        for vec in vectors:
            if len(vec) != self.dimension:
                raise ProviderContractError(
                    f"provider {self.provider_id} returned dimension {len(vec)}, "
                    f"declared {self.dimension}"
                )
            if not all(np.isfinite(vec)):
                raise ProviderContractError("provider returned a non-finite vector")
        return vectors


class CachedEmbedder(EmbeddingProvider):
    """Persistent content-addressed cache in front of another provider."""

    def __init__(self, inner: EmbeddingProvider, cache_path: str | Path | None = None):
        self.inner = inner
        self.provider_id = inner.provider_id
        self.dimension = inner.dimension
        self.max_batch_size = inner.max_batch_size
        self.cache_path = Path(cache_path) if cache_path else None
        self.calls_forwarded = 0
        self._cache: dict[str, tuple[float, ...]] = {}
        if self.cache_path and self.cache_path.exists():
            raw = json.loads(self.cache_path.read_text(encoding="utf-8"))
            self._cache = {key: tuple(vec) for key, vec in raw.items()}

    def _key(self, text: str) -> str:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return f"{self.provider_id}:{digest}"

    def embed_batch(self, texts: list[str]) -> list[tuple[float, ...]]:
        keys = [self._key(t) for t in texts]
        missing = [i for i, key in enumerate(keys) if key not in self._cache]
        if missing:
            fetched = self.inner.embed_batch([texts[i] for i in missing])
            self.calls_forwarded += 1
            for i, vec in zip(missing, fetched):
                self._cache[keys[i]] = vec
            self._save()
        return [self._cache[key] for key in keys]

    def _save(self) -> None:
        if self.cache_path is None:
            return
        atomic_write_text(
            self.cache_path,
            json.dumps({key: list(vec) for key, vec in self._cache.items()}),
        )
