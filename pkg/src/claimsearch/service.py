"""Real-time claim search service.

The engine holds an immutable snapshot (index + corpus + embedder); a
search embeds the query claim, pulls the nearest chunks, aggregates them
to ranked documents and optionally re-ranks the top N with the weighted
paragraph-element method.  Responses carry per-stage timings so the
latency of embed / retrieval / re-rank stays observable.

HTTP surface (JSON in, JSON out):

    GET  /health
    POST /search          SearchRequest -> SearchResponse
    GET  /doc/{id}?query_id=...
    POST /index/reload

Reload builds a fresh snapshot and swaps it atomically; requests in
flight keep the snapshot they started with.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from .chunking import ChunkerConfig, ChunkRef
from .corpus import ClaimElement, CorpusStore, document_to_dict, normalize_text
from .embed import EmbedError, Embedder
from .errors import ClaimSearchError, ConfigError
from .index import (
    DEFAULT_K,
    DEFAULT_RERANK_N,
    VectorIndex,
    aggregate_documents,
    rerank_top_n,
)
from .scoring import ClaimQuery, ScoredDocument, WeightScheme, query_text_for_elements

logger = logging.getLogger(__name__)

_SNIPPET_CHARS = 240
_QUERY_CACHE_SIZE = 64


class EmptyClaimRequest(ClaimSearchError):
    """The search request carries no claim text."""


class BadRequest(ClaimSearchError):
    """The request is structurally invalid."""


class IndexNotLoaded(ClaimSearchError):
    """The service has no index snapshot to search."""


class EmbedderUnavailable(ClaimSearchError):
    """The embedding provider failed while serving a request."""


class DocNotFoundHttp(ClaimSearchError):
    """Requested document is not in the corpus."""


def detect_claim_elements(claim_text: str) -> list[str]:
    """Split pasted claim text into elements.

    Preference order: blank-line separated segments, one element per
    line, semicolon-terminated segments (with the preamble split off at
    its colon), else the whole claim as a single element.
    """
    text = claim_text.strip()
    if not text:
        return []
    blocks = [normalize_text(b) for b in re.split(r"\n\s*\n", text) if b.strip()]
    if len(blocks) > 1:
        return blocks
    lines = [normalize_text(l) for l in text.splitlines() if l.strip()]
    if len(lines) > 1:
        return lines
    segments = [normalize_text(s) for s in text.split(";") if s.strip()]
    if len(segments) > 1:
        first = segments[0]
        if ":" in first:
            head, _, rest = first.partition(":")
            out = [normalize_text(head) + ":"]
            if rest.strip():
                out.append(normalize_text(rest))
            return out + segments[1:]
        return segments
    return [normalize_text(text)]


@dataclass
class SearchRequest:
    claim_text: str
    k: int = DEFAULT_K
    rerank_n: int = DEFAULT_RERANK_N
    weighting: str = WeightScheme.TOKEN_PROPORTIONAL.value

    @classmethod
    def from_dict(cls, data: dict) -> "SearchRequest":
        if not isinstance(data, dict):
            raise BadRequest("request body must be a JSON object")
        claim_text = str(data.get("claim_text", "") or "")
        if not claim_text.strip():
            raise EmptyClaimRequest("claim_text is empty")
        k = int(data.get("k", DEFAULT_K))
        rerank_n = int(data.get("rerank_n", DEFAULT_RERANK_N))
        if k < 1:
            raise BadRequest(f"k must be >= 1, got {k}")
        if rerank_n < 0:
            raise BadRequest(f"rerank_n must be >= 0, got {rerank_n}")
        if rerank_n > k:
            raise BadRequest(f"rerank_n ({rerank_n}) must not exceed k ({k})")
        weighting = str(data.get("weighting", WeightScheme.TOKEN_PROPORTIONAL.value))
        try:
            WeightScheme(weighting)
        except ValueError:
            raise BadRequest(f"unknown weighting {weighting!r}") from None
        return cls(claim_text=claim_text, k=k, rerank_n=rerank_n, weighting=weighting)


@dataclass
class SearchResponse:
    query_id: str
    elements: list[str]
    results: list[dict]
    timing: dict
    truncated_query: bool

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "elements": self.elements,
            "results": self.results,
            "timing": self.timing,
            "truncated_query": self.truncated_query,
        }


@dataclass
class _CachedQuery:
    query: ClaimQuery
    element_vecs: np.ndarray


@dataclass
class _Snapshot:
    index: VectorIndex | None = None
    corpus: CorpusStore = field(default_factory=CorpusStore)


class SearchEngine:
    """Search over one immutable (index, corpus, embedder) snapshot."""

    def __init__(
        self,
        index: VectorIndex | None = None,
        corpus: CorpusStore | None = None,
        embedder: Embedder | None = None,
        chunker_config: ChunkerConfig | None = None,
        default_k: int = DEFAULT_K,
        default_rerank_n: int = DEFAULT_RERANK_N,
        index_dir: str | Path | None = None,
        corpus_path: str | Path | None = None,
    ) -> None:
        self._snapshot = _Snapshot(index=index, corpus=corpus or CorpusStore())
        self.embedder = embedder
        self.chunker_config = chunker_config or ChunkerConfig()
        self.default_k = default_k
        self.default_rerank_n = default_rerank_n
        self.index_dir = Path(index_dir) if index_dir else None
        self.corpus_path = Path(corpus_path) if corpus_path else None
        self._queries: OrderedDict[str, _CachedQuery] = OrderedDict()
        self._lock = threading.Lock()

    # -- snapshot management -------------------------------------------

    @property
    def index(self) -> VectorIndex | None:
        return self._snapshot.index

    @property
    def corpus(self) -> CorpusStore:
        return self._snapshot.corpus

    def reload(self) -> dict:
        """Rebuild the snapshot from the configured paths and swap it in."""
        if self.index_dir is None:
            raise ConfigError("no index directory configured for reload")
        index = VectorIndex.load(self.index_dir)
        corpus = (
            CorpusStore.from_jsonl(self.corpus_path)
            if self.corpus_path
            else self._snapshot.corpus
        )
        with self._lock:
            self._snapshot = _Snapshot(index=index, corpus=corpus)
        logger.info("index reloaded: %d vectors", len(index))
        return {"status": "reloaded", "vectors": len(index)}

    # -- search ----------------------------------------------------------

    def _require_ready(self) -> tuple[VectorIndex, CorpusStore]:
        snapshot = self._snapshot
        if snapshot.index is None:
            raise IndexNotLoaded("no index loaded")
        if self.embedder is None:
            raise ConfigError("no embedder configured")
        if self.embedder.provider_id != snapshot.index.provider_id:
            raise ConfigError(
                f"embedder {self.embedder.provider_id} does not match index "
                f"provider {snapshot.index.provider_id}"
            )
        return snapshot.index, snapshot.corpus

    def _remember_query(self, query_id: str, cached: _CachedQuery) -> None:
        self._queries[query_id] = cached
        self._queries.move_to_end(query_id)
        while len(self._queries) > _QUERY_CACHE_SIZE:
            self._queries.popitem(last=False)

    def _chunk_snippet(self, corpus: CorpusStore, ref: ChunkRef) -> str | None:
        doc = corpus.get(ref.doc_id)
        if doc is None:
            return None
        wanted = set(ref.paragraph_numbers)
        texts = [
            p.text
            for section in doc.sections
            if section.name == ref.section
            for p in section.paragraphs
            if p.number in wanted
        ]
        if not texts:
            return None
        joined = " ".join(texts)
        return joined[:_SNIPPET_CHARS] + ("…" if len(joined) > _SNIPPET_CHARS else "")

    def search(self, request: SearchRequest) -> SearchResponse:
        index, corpus = self._require_ready()
        element_texts = detect_claim_elements(request.claim_text)
        if not element_texts:
            raise EmptyClaimRequest("claim_text is empty")
        budget = self.chunker_config.max_seq_length
        query_text, truncated = query_text_for_elements(element_texts, budget)
        elements = tuple(ClaimElement(text=t, depth=0) for t in element_texts)
        query = ClaimQuery(
            claim_text=normalize_text(request.claim_text),
            elements=elements,
            query_text=query_text,
            token_budget=budget,
            truncated=truncated,
        )

        t0 = time.perf_counter()
        try:
            query_vec = self.embedder.embed_text(query_text)
            element_vecs = self.embedder.embed_batch(element_texts)
        except EmbedError as exc:
            raise EmbedderUnavailable(str(exc)) from exc
        t1 = time.perf_counter()
        hits = index.query(query_vec, request.k)
        t2 = time.perf_counter()
        docs = aggregate_documents(hits)

        rerank_ms = 0.0
        if request.rerank_n > 0 and docs:
            top = docs[: request.rerank_n]
            t3 = time.perf_counter()
            reranked = rerank_top_n(
                query, top, corpus, self.embedder, scheme=request.weighting
            )
            rerank_ms = (time.perf_counter() - t3) * 1000.0
            docs = reranked + docs[request.rerank_n :]

        query_id = _query_id(query_text, index.provider_id)
        self._remember_query(query_id, _CachedQuery(query=query, element_vecs=element_vecs))

        results = [self._result_entry(corpus, d) for d in docs]
        timing = {
            "embed_ms": (t1 - t0) * 1000.0,
            "ann_ms": (t2 - t1) * 1000.0,
            "rerank_ms": rerank_ms,
        }
        return SearchResponse(
            query_id=query_id,
            elements=list(element_texts),
            results=results,
            timing=timing,
            truncated_query=truncated,
        )

    def _result_entry(self, corpus: CorpusStore, doc: ScoredDocument) -> dict:
        entry: dict = {"doc_id": doc.doc_id, "score": doc.score}
        if doc.rerank_score is not None:
            entry["rerank_score"] = doc.rerank_score
        hit = doc.best_chunk
        if hit is not None:
            entry["best_chunk"] = {
                "section": hit.ref.section.value,
                "paragraph_numbers": list(hit.ref.paragraph_numbers),
                "part": hit.ref.part,
                "similarity": hit.similarity,
                "snippet": self._chunk_snippet(corpus, hit.ref),
            }
        if doc.per_element_best is not None:
            entry["per_element_matches"] = doc.per_element_best
        return entry

    # -- document detail --------------------------------------------------

    def document(self, doc_id: str, query_id: str | None = None) -> dict:
        corpus = self._snapshot.corpus
        doc = corpus.get(doc_id)
        if doc is None:
            raise DocNotFoundHttp(f"document {doc_id} not found")
        payload = document_to_dict(doc)
        if query_id:
            cached = self._queries.get(query_id)
            if cached is None:
                payload["overlay"] = None  # stale or unknown query: plain text view
                return payload
            paragraphs = [
                (section.name, p.number, p.text)
                for section in doc.sections
                for p in section.paragraphs
            ]
            if paragraphs and self.embedder is not None:
                paragraph_vecs = self.embedder.embed_batch([t for _, _, t in paragraphs])
                sims = _overlay_similarities(cached.element_vecs, paragraph_vecs)
                per_element_best = [
                    int(np.argmax(sims[e])) for e in range(sims.shape[0])
                ]
                payload["overlay"] = {
                    "query_id": query_id,
                    "elements": [e.text for e in cached.query.elements],
                    "paragraphs": [
                        {
                            "section": name.value,
                            "number": number,
                            "similarities": [float(s) for s in sims[:, i]],
                        }
                        for i, (name, number, _) in enumerate(paragraphs)
                    ],
                    "per_element_best": per_element_best,
                }
            else:
                payload["overlay"] = None
        return payload


def _overlay_similarities(element_vecs: np.ndarray, paragraph_vecs: np.ndarray) -> np.ndarray:
    def unit(matrix: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        return matrix / np.where(norms == 0.0, 1.0, norms)

    return unit(np.asarray(element_vecs, dtype=np.float64)) @ unit(
        np.asarray(paragraph_vecs, dtype=np.float64)
    ).T


def _query_id(query_text: str, provider_id: str) -> str:
    import hashlib

    return hashlib.blake2b(
        f"{provider_id}\n{query_text}".encode("utf-8"), digest_size=6
    ).hexdigest()


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

_STATUS_OF = {
    EmptyClaimRequest: 400,
    BadRequest: 400,
    DocNotFoundHttp: 404,
    IndexNotLoaded: 409,
    EmbedderUnavailable: 502,
}


class _ApiHandler(BaseHTTPRequestHandler):
    server_version = "claimsearch/0.1"

    @property
    def engine(self) -> SearchEngine:
        return self.server.engine  # type: ignore[attr-defined]

    def log_message(self, fmt: str, *args) -> None:
        logger.debug("%s - %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, exc: Exception) -> None:
        status = 500
        for err_type, code in _STATUS_OF.items():
            if isinstance(exc, err_type):
                status = code
                break
        self._send_json(
            status, {"error": type(exc).__name__, "message": str(exc)}
        )

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BadRequest(f"invalid JSON body: {exc}") from exc

    def do_OPTIONS(self) -> None:  # CORS preflight for the browser client
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self) -> None:
        parsed = urlparse(self.path)
        try:
            if parsed.path == "/health":
                index = self.engine.index
                self._send_json(
                    200,
                    {
                        "status": "ok",
                        "index_loaded": index is not None,
                        "vectors": len(index) if index is not None else 0,
                        "documents": len(self.engine.corpus),
                    },
                )
            elif parsed.path.startswith("/doc/"):
                doc_id = parsed.path[len("/doc/") :]
                params = parse_qs(parsed.query)
                query_id = params.get("query_id", [None])[0]
                self._send_json(200, self.engine.document(doc_id, query_id))
            else:
                self._send_json(404, {"error": "NotFound", "message": self.path})
        except Exception as exc:  # every handler answers JSON, never a stack trace
            self._send_error_json(exc)

    def do_POST(self) -> None:
        parsed = urlparse(self.path)
        try:
            if parsed.path == "/search":
                request = SearchRequest.from_dict(self._read_body())
                response = self.engine.search(request)
                self._send_json(200, response.to_dict())
            elif parsed.path == "/index/reload":
                self._send_json(200, self.engine.reload())
            else:
                self._send_json(404, {"error": "NotFound", "message": self.path})
        except Exception as exc:
            self._send_error_json(exc)


def make_server(
    engine: SearchEngine, host: str = "127.0.0.1", port: int = 8080
) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _ApiHandler)
    server.engine = engine  # type: ignore[attr-defined]
    return server


# ---------------------------------------------------------------------------
# Service configuration
# ---------------------------------------------------------------------------

_ENV_PREFIX = "CLAIMSEARCH_"


@dataclass
class ServiceConfig:
    index_dir: str | None = None
    corpus_path: str | None = None
    provider: str = "reference"
    dim: int = 256
    endpoint: str | None = None
    max_seq_length: int = 512
    k: int = DEFAULT_K
    rerank_n: int = DEFAULT_RERANK_N
    host: str = "127.0.0.1"
    port: int = 8080


def load_service_config(
    path: str | Path | None = None, env: dict | None = None
) -> ServiceConfig:
    """Defaults, overridden by a JSON config file, overridden by env vars
    (CLAIMSEARCH_INDEX_DIR, CLAIMSEARCH_CORPUS_PATH, ...)."""
    config = ServiceConfig()
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        for key, value in data.items():
            if not hasattr(config, key):
                raise ConfigError(f"unknown config key {key!r}")
            setattr(config, key, value)
    env = env if env is not None else dict(os.environ)
    for field_name in (
        "index_dir",
        "corpus_path",
        "provider",
        "endpoint",
        "host",
    ):
        value = env.get(_ENV_PREFIX + field_name.upper())
        if value:
            setattr(config, field_name, value)
    for field_name in ("dim", "max_seq_length", "k", "rerank_n", "port"):
        value = env.get(_ENV_PREFIX + field_name.upper())
        if value:
            setattr(config, field_name, int(value))
    return config


def engine_from_config(config: ServiceConfig) -> SearchEngine:
    from .embed import make_embedder

    embedder = make_embedder(config.provider, dim=config.dim, endpoint=config.endpoint)
    engine = SearchEngine(
        embedder=embedder,
        chunker_config=ChunkerConfig(max_seq_length=config.max_seq_length),
        default_k=config.k,
        default_rerank_n=config.rerank_n,
        index_dir=config.index_dir,
        corpus_path=config.corpus_path,
    )
    if config.index_dir:
        engine.reload()
    return engine
