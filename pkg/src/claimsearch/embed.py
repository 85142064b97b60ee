"""Embedding providers behind one contract.

Two providers ship with the package:

  - ReferenceEmbedder: deterministic signed feature hashing over the
    reference tokenizer's bag of tokens.  Texts sharing vocabulary score
    a high cosine, which is exactly what synthetic ground-truth corpora
    and the test suite need.  It is explicitly not a claim-quality model.
  - RemoteEmbedder: JSON-over-HTTP client for an external inference
    service hosting a real model (request {"texts": [...]}, response
    {"vectors": [[...]]}), with batching and bounded retries.

Every provider carries a `provider_id` (name:version:dim); persisted
vectors record it, and mixing providers in one index is rejected.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from .errors import ClaimSearchError, ConfigError
from .tokenizer import get_token_counter

logger = logging.getLogger(__name__)

ENDPOINT_ENV_VAR = "CLAIMSEARCH_EMBED_ENDPOINT"
TOKEN_ENV_VAR = "CLAIMSEARCH_EMBED_TOKEN"


class EmbedError(ClaimSearchError):
    """Embedding failed."""


class RemoteUnavailable(EmbedError):
    """The embedding service could not be reached after bounded retries."""


class TextTooLong(EmbedError):
    """An input text exceeds the provider's length limit."""


class Provider(str, Enum):
    REFERENCE = "reference"
    REMOTE = "remote"


class ReferenceEmbedder:
    """Signed feature hashing over lowercased tokens, L2-normalized.

    Deterministic across processes (hashes are keyed on token bytes, not
    Python's randomized hash).  Token order does not matter: the model
    is a pure bag of tokens.  Empty or whitespace-only text embeds to
    the all-zero vector.
    """

    name = "reference"
    version = "1"

    def __init__(self, dim: int = 256) -> None:
        if dim < 2:
            raise ConfigError(f"embedding dim must be >= 2, got {dim}")
        self.dim = dim
        self._counter = get_token_counter("reference")

    @property
    def provider_id(self) -> str:
        return f"{self.name}:{self.version}:{self.dim}"

    def embed_text(self, text: str) -> np.ndarray:
        acc = np.zeros(self.dim, dtype=np.float64)
        for token in self._counter.tokens(text.lower()):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            sign = 1.0 if value & 1 == 0 else -1.0
            acc[(value >> 1) % self.dim] += sign
        norm = float(np.linalg.norm(acc))
        if norm == 0.0:
            return np.zeros(self.dim, dtype=np.float32)
        return (acc / norm).astype(np.float32)

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        if len(texts) == 0:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([self.embed_text(t) for t in texts])


class RemoteEmbedder:
    """Client for an external embedding inference service."""

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        dim: int,
        *,
        model: str = "default",
        auth_token: str | None = None,
        batch_size: int = 64,
        timeout: float = 30.0,
        max_retries: int = 3,
        backoff: float = 0.5,
        max_text_len: int | None = None,
        max_in_flight: int = 1,
        session: requests.Session | None = None,
    ) -> None:
        if not endpoint:
            raise ConfigError("remote embedder requires an endpoint")
        if batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
        self.endpoint = endpoint
        self.dim = dim
        self.model = model
        self.batch_size = batch_size
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.max_text_len = max_text_len
        self.max_in_flight = max(1, max_in_flight)
        self._session = session or requests.Session()
        if auth_token:
            self._session.headers["Authorization"] = f"Bearer {auth_token}"

    @property
    def provider_id(self) -> str:
        return f"{self.name}:{self.model}:{self.dim}"

    def embed_text(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def _post_batch(self, texts: list[str]) -> np.ndarray:
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self._session.post(
                    self.endpoint, json={"texts": texts}, timeout=self.timeout
                )
                if response.status_code >= 500:
                    raise RemoteUnavailable(f"server returned {response.status_code}")
                response.raise_for_status()
                vectors = np.asarray(response.json()["vectors"], dtype=np.float32)
            except (requests.RequestException, RemoteUnavailable, KeyError, ValueError) as exc:
                last_error = exc
                logger.debug("embed attempt %d failed: %s", attempt + 1, exc)
                continue
            if vectors.shape != (len(texts), self.dim):
                raise EmbedError(
                    f"service returned shape {vectors.shape}, "
                    f"expected {(len(texts), self.dim)}"
                )
            return vectors
        raise RemoteUnavailable(
            f"embedding service unavailable after {self.max_retries} attempts: {last_error}"
        )

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        texts = list(texts)
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        if self.max_text_len is not None:
            too_long = [i for i, t in enumerate(texts) if len(t) > self.max_text_len]
            if too_long:
                raise TextTooLong(f"texts at indices {too_long} exceed {self.max_text_len} chars")
        batches = [
            texts[i : i + self.batch_size] for i in range(0, len(texts), self.batch_size)
        ]
        if self.max_in_flight > 1 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
                results = list(pool.map(self._post_batch, batches))
        else:
            results = [self._post_batch(batch) for batch in batches]
        return np.concatenate(results, axis=0)


Embedder = ReferenceEmbedder | RemoteEmbedder


@dataclass
class EmbedderConfig:
    provider: Provider = Provider.REFERENCE
    dim: int = 256
    endpoint: str | None = None
    auth_token: str | None = None
    model: str = "default"
    batch_size: int = 64

    def create(self) -> Embedder:
        if self.provider is Provider.REFERENCE:
            return ReferenceEmbedder(dim=self.dim)
        endpoint = self.endpoint or os.environ.get(ENDPOINT_ENV_VAR)
        if not endpoint:
            raise ConfigError(
                f"remote provider needs an endpoint (flag or {ENDPOINT_ENV_VAR})"
            )
        token = self.auth_token or os.environ.get(TOKEN_ENV_VAR)
        return RemoteEmbedder(
            endpoint,
            dim=self.dim,
            model=self.model,
            auth_token=token,
            batch_size=self.batch_size,
        )


def make_embedder(provider: str, dim: int = 256, **kwargs) -> Embedder:
    return EmbedderConfig(provider=Provider(provider), dim=dim, **kwargs).create()


def text_hash(text: str) -> str:
    return hashlib.blake2b(text.encode("utf-8"), digest_size=16).hexdigest()


class VectorCache:
    """JSONL-backed cache of {text_hash, provider_id, vector} entries."""

    def __init__(self) -> None:
        self._entries: dict[tuple[str, str], np.ndarray] = {}

    @classmethod
    def load(cls, path: str | Path) -> "VectorCache":
        cache = cls()
        path = Path(path)
        if path.exists():
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    entry = json.loads(line)
                    key = (entry["text_hash"], entry["provider_id"])
                    cache._entries[key] = np.asarray(entry["vector"], dtype=np.float32)
        return cache

    def get(self, text: str, provider_id: str) -> np.ndarray | None:
        return self._entries.get((text_hash(text), provider_id))

    def put(self, text: str, provider_id: str, vector: np.ndarray) -> None:
        self._entries[(text_hash(text), provider_id)] = np.asarray(
            vector, dtype=np.float32
        )

    def save(self, path: str | Path) -> int:
        with open(path, "w", encoding="utf-8") as fh:
            for (digest, provider_id), vector in sorted(
                self._entries.items(), key=lambda kv: kv[0]
            ):
                fh.write(
                    json.dumps(
                        {
                            "text_hash": digest,
                            "provider_id": provider_id,
                            "vector": [float(x) for x in vector],
                        },
                        sort_keys=True,
                    )
                )
                fh.write("\n")
        return len(self._entries)

    def __len__(self) -> int:
        return len(self._entries)


def embed_with_cache(
    embedder: Embedder, texts: Sequence[str], cache: VectorCache
) -> np.ndarray:
    """Batch embedding that fills and reuses a vector cache."""
    missing = [t for t in texts if cache.get(t, embedder.provider_id) is None]
    if missing:
        unique = list(dict.fromkeys(missing))
        vectors = embedder.embed_batch(unique)
        for text, vector in zip(unique, vectors):
            cache.put(text, embedder.provider_id, vector)
    out = [cache.get(t, embedder.provider_id) for t in texts]
    return np.stack(out) if out else np.zeros((0, embedder.dim), dtype=np.float32)
