"""Chunk-level vector index: exact scan, HNSW graph, persistence.

One vector per chunk of each corpus document.  Exact mode is a flat
normalized-matrix scan and doubles as the oracle for the approximate
mode, which is a hierarchical navigable small-world graph tuned for
cosine similarity.  Retrieval results aggregate to documents (per-doc
max chunk similarity) and the top N documents can be re-ranked with the
weighted paragraph-element method over on-the-fly paragraph embeddings.

On-disk layout of an index directory:

    vectors.bin     float32 rows, unit-normalized (memory-mapped on load)
    manifest.json   {format, provider_id, dim, count, ann}
    chunkrefs.jsonl one chunk reference per line, row order
    graph.npz       HNSW adjacency (approximate mode only)
"""

from __future__ import annotations

import heapq
import json
import logging
import math
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .chunking import Chunk, ChunkRef
from .corpus import CorpusStore
from .errors import ClaimSearchError, ConfigError, DimMismatch
from .scoring import (
    ClaimQuery,
    ScoredDocument,
    WeightScheme,
    make_weighting,
    weighted_paragraph_element_score,
)

logger = logging.getLogger(__name__)

DEFAULT_K = 5000
DEFAULT_RERANK_N = 50

_MANIFEST_FORMAT = "claimsearch-index/1"


class ProviderMismatch(ClaimSearchError):
    """Vectors from different embedding providers were mixed."""


class DuplicateChunkRef(ClaimSearchError):
    """Two entries share the same chunk reference."""


class DocNotFound(ClaimSearchError):
    """The corpus has no text for a document referenced by the index."""


class IndexFormatError(ClaimSearchError):
    """A persisted index directory is unreadable or inconsistent."""


@dataclass(frozen=True)
class ChunkHit:
    ref: ChunkRef
    similarity: float
    rank: int


@dataclass(frozen=True)
class AnnParams:
    mode: str = "exact"  # "exact" | "hnsw"
    m: int = 16
    m0: int = 32
    ef_construction: int = 80
    ef_search: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("exact", "hnsw"):
            raise ConfigError(f"unknown index mode {self.mode!r}")
        if self.m < 2 or self.m0 < self.m:
            raise ConfigError(f"need m >= 2 and m0 >= m, got m={self.m} m0={self.m0}")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "m": self.m,
            "m0": self.m0,
            "ef_construction": self.ef_construction,
            "ef_search": self.ef_search,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnnParams":
        return cls(**data)


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return (matrix / safe).astype(np.float32)


class _HnswGraph:
    """Navigable small-world graph over a fixed unit-vector matrix.

    Adjacency is stored as fixed-width int32 rows per layer; a stamp
    array replaces per-search visited-set allocation.  Distance is
    1 - dot on unit vectors.  Construction is sequential and seeded, so
    identical input yields an identical graph.
    """

    def __init__(self, units: np.ndarray, params: AnnParams) -> None:
        self._units = units
        self._m = params.m
        self._m0 = params.m0
        self._ef_construction = params.ef_construction
        self._ml = 1.0 / math.log(params.m)
        self._rng = random.Random(params.seed)
        n = units.shape[0]
        self._levels = np.zeros(n, dtype=np.int32)
        self._layers: list[tuple[np.ndarray, np.ndarray]] = []
        self._visited = np.zeros(n, dtype=np.int64)
        self._stamp = 0
        self._entry = -1
        self._top = -1

    # -- construction -------------------------------------------------

    def build(self) -> None:
        for idx in range(self._units.shape[0]):
            self._insert(idx)

    def _width(self, layer: int) -> int:
        return self._m0 if layer == 0 else self._m

    def _ensure_layers(self, level: int) -> None:
        n = self._units.shape[0]
        while len(self._layers) <= level:
            layer = len(self._layers)
            width = self._width(layer)
            self._layers.append(
                (np.full((n, width), -1, dtype=np.int32), np.zeros(n, dtype=np.int32))
            )

    def _insert(self, idx: int) -> None:
        level = int(-math.log(1.0 - self._rng.random()) * self._ml)
        self._levels[idx] = level
        self._ensure_layers(level)
        if self._entry < 0:
            self._entry = idx
            self._top = level
            return
        q = self._units[idx]
        eps = [self._entry]
        for layer in range(self._top, level, -1):
            eps = [self._greedy_descend(q, eps[0], layer)]
        for layer in range(min(level, self._top), -1, -1):
            found = self._search_layer(q, eps, layer, self._ef_construction)
            neighbors = self._select_neighbors(found, self._m, idx)
            for neighbor in neighbors:
                self._add_link(layer, idx, neighbor)
                self._add_link(layer, neighbor, idx)
            eps = [node for _, node in found]
        if level > self._top:
            self._entry = idx
            self._top = level

    def _add_link(self, layer: int, src: int, dst: int) -> None:
        adj, cnt = self._layers[layer]
        count = cnt[src]
        if count < adj.shape[1]:
            adj[src, count] = dst
            cnt[src] = count + 1
            return
        # row full: re-select the best `width` among existing + new
        row = adj[src].tolist()
        row.append(dst)
        dists = 1.0 - self._units[row] @ self._units[src]
        candidates = sorted(zip(dists.tolist(), row))
        selected = self._select_neighbors(candidates, adj.shape[1], src)
        adj[src, : len(selected)] = selected
        adj[src, len(selected):] = -1
        cnt[src] = len(selected)

    def _select_neighbors(
        self, candidates: list[tuple[float, int]], m: int, query_idx: int
    ) -> list[int]:
        """Diversity-aware selection: keep a candidate only if it is
        closer to the query point than to any already-kept neighbor;
        fill remaining slots from the discard pile."""
        if len(candidates) <= m:
            return [node for _, node in candidates if node != query_idx]
        units = self._units
        ids = [node for _, node in candidates]
        # one gemm for all pairwise similarities; the greedy loop then
        # runs on plain floats (tiny per-element numpy calls dominate
        # build time otherwise)
        sims = (units[ids] @ units[ids].T).tolist()
        selected: list[int] = []  # positions into candidates
        discarded: list[int] = []
        for pos, (dist, node) in enumerate(candidates):
            if len(selected) == m:
                break
            if node == query_idx:
                continue
            if not selected:
                selected.append(pos)
                continue
            row = sims[pos]
            closest_selected = max(map(row.__getitem__, selected))
            if dist < 1.0 - closest_selected:
                selected.append(pos)
            else:
                discarded.append(pos)
        for pos in discarded:
            if len(selected) == m:
                break
            selected.append(pos)
        return [candidates[pos][1] for pos in selected]

    # -- search --------------------------------------------------------

    def _greedy_descend(self, q: np.ndarray, entry: int, layer: int) -> int:
        """Best-first walk with beam width 1 (the ef=1 special case)."""
        adj, cnt = self._layers[layer]
        units = self._units
        best = entry
        best_sim = float(units[entry] @ q)
        improved = True
        while improved:
            improved = False
            row = adj[best, : cnt[best]]
            if row.size == 0:
                break
            sims = units[row] @ q
            j = int(np.argmax(sims))
            if float(sims[j]) > best_sim:
                best = int(row[j])
                best_sim = float(sims[j])
                improved = True
        return best

    def _search_layer(
        self, q: np.ndarray, entry_points: list[int], layer: int, ef: int
    ) -> list[tuple[float, int]]:
        adj, cnt = self._layers[layer]
        units = self._units
        visited = self._visited
        self._stamp += 1
        stamp = self._stamp

        eps = np.asarray(entry_points, dtype=np.int64)
        visited[eps] = stamp
        dists = 1.0 - units[eps] @ q
        candidates = list(zip(dists.tolist(), entry_points))
        heapq.heapify(candidates)
        best = [(-d, node) for d, node in candidates]
        heapq.heapify(best)
        while len(best) > ef:
            heapq.heappop(best)

        while candidates:
            dist, node = heapq.heappop(candidates)
            if len(best) >= ef and dist > -best[0][0]:
                break
            row = adj[node, : cnt[node]]
            fresh = row[visited[row] != stamp]
            if fresh.size == 0:
                continue
            visited[fresh] = stamp
            fresh_dists = 1.0 - units[fresh] @ q
            for nd, nid in zip(fresh_dists.tolist(), fresh.tolist()):
                if len(best) < ef:
                    heapq.heappush(candidates, (nd, nid))
                    heapq.heappush(best, (-nd, nid))
                elif nd < -best[0][0]:
                    heapq.heappush(candidates, (nd, nid))
                    heapq.heappush(best, (-nd, nid))
                    heapq.heappop(best)
        return sorted((-neg, node) for neg, node in best)

    def search(self, q: np.ndarray, k: int, ef_search: int) -> list[tuple[float, int]]:
        if self._entry < 0:
            return []
        entry = self._entry
        for layer in range(self._top, 0, -1):
            entry = self._greedy_descend(q, entry, layer)
        found = self._search_layer(q, [entry], 0, max(ef_search, k))
        return found[:k]

    # -- persistence ----------------------------------------------------

    def to_arrays(self) -> dict[str, np.ndarray]:
        arrays: dict[str, np.ndarray] = {
            "levels": self._levels,
            "meta": np.asarray([self._entry, self._top, len(self._layers)], dtype=np.int64),
        }
        for i, (adj, cnt) in enumerate(self._layers):
            arrays[f"adj_{i}"] = adj
            arrays[f"cnt_{i}"] = cnt
        return arrays

    @classmethod
    def from_arrays(
        cls, units: np.ndarray, params: AnnParams, arrays: dict[str, np.ndarray]
    ) -> "_HnswGraph":
        graph = cls(units, params)
        graph._levels = np.asarray(arrays["levels"], dtype=np.int32)
        entry, top, n_layers = (int(x) for x in arrays["meta"])
        graph._entry = entry
        graph._top = top
        graph._layers = [
            (
                np.asarray(arrays[f"adj_{i}"], dtype=np.int32),
                np.asarray(arrays[f"cnt_{i}"], dtype=np.int32),
            )
            for i in range(n_layers)
        ]
        return graph


class VectorIndex:
    """Immutable-after-build index of chunk vectors for one provider."""

    def __init__(
        self,
        provider_id: str,
        refs: list[ChunkRef],
        units: np.ndarray,
        params: AnnParams,
        graph: _HnswGraph | None = None,
    ) -> None:
        self.provider_id = provider_id
        self.refs = refs
        self._units = units
        self.params = params
        self._graph = graph

    @property
    def dim(self) -> int:
        return int(self._units.shape[1])

    def __len__(self) -> int:
        return len(self.refs)

    def query(self, query_vec: np.ndarray, k: int) -> list[ChunkHit]:
        """Top-k chunks by cosine, ranks 1..k with non-increasing
        similarity; k larger than the index returns everything."""
        if k < 1:
            raise ConfigError(f"k must be >= 1, got {k}")
        query = np.asarray(query_vec, dtype=np.float32)
        if query.shape != (self.dim,):
            raise DimMismatch(f"query shape {query.shape}, index dim {self.dim}")
        if not self.refs:
            return []
        norm = float(np.linalg.norm(query))
        q_unit = (query / norm) if norm else query
        k = min(k, len(self.refs))
        if self.params.mode == "hnsw" and self._graph is not None:
            found = self._graph.search(q_unit, k, self.params.ef_search)
            pairs = [(1.0 - dist, node) for dist, node in found]
        else:
            sims = self._units @ q_unit
            if k < len(sims):
                top = np.argpartition(-sims, k - 1)[:k]
            else:
                top = np.arange(len(sims))
            order = top[np.lexsort((top, -sims[top]))]
            pairs = [(float(sims[i]), int(i)) for i in order]
        return [
            ChunkHit(ref=self.refs[node], similarity=float(sim), rank=rank)
            for rank, (sim, node) in enumerate(pairs, start=1)
        ]

    # -- persistence ----------------------------------------------------

    def save(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self._units.astype(np.float32).tofile(out / "vectors.bin")
        manifest = {
            "format": _MANIFEST_FORMAT,
            "provider_id": self.provider_id,
            "dim": self.dim,
            "count": len(self.refs),
            "ann": self.params.to_dict(),
        }
        with open(out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        with open(out / "chunkrefs.jsonl", "w", encoding="utf-8") as fh:
            for ref in self.refs:
                fh.write(json.dumps(ref.to_dict(), sort_keys=True, ensure_ascii=False))
                fh.write("\n")
        if self._graph is not None:
            np.savez_compressed(out / "graph.npz", **self._graph.to_arrays())

    @classmethod
    def load(cls, index_dir: str | Path, mmap: bool = True) -> "VectorIndex":
        root = Path(index_dir)
        manifest_path = root / "manifest.json"
        if not manifest_path.exists():
            raise IndexFormatError(f"no manifest.json under {root}")
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        if manifest.get("format") != _MANIFEST_FORMAT:
            raise IndexFormatError(f"unsupported index format {manifest.get('format')!r}")
        count, dim = int(manifest["count"]), int(manifest["dim"])
        params = AnnParams.from_dict(manifest["ann"])
        mode = "r" if mmap else None
        if mmap:
            units = np.memmap(root / "vectors.bin", dtype=np.float32, mode=mode, shape=(count, dim))
        else:
            units = np.fromfile(root / "vectors.bin", dtype=np.float32).reshape(count, dim)
        refs: list[ChunkRef] = []
        with open(root / "chunkrefs.jsonl", "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    refs.append(ChunkRef.from_dict(json.loads(line)))
        if len(refs) != count:
            raise IndexFormatError(f"manifest says {count} entries, found {len(refs)} refs")
        graph = None
        if params.mode == "hnsw":
            graph_path = root / "graph.npz"
            if not graph_path.exists():
                raise IndexFormatError("hnsw index without graph.npz")
            with np.load(graph_path) as data:
                graph = _HnswGraph.from_arrays(units, params, dict(data))
        return cls(manifest["provider_id"], refs, units, params, graph)


def build_index(
    entries: Iterable[tuple[Chunk | ChunkRef, np.ndarray]],
    provider_id: str,
    params: AnnParams | None = None,
) -> VectorIndex:
    """Build an index from (chunk, vector) pairs.

    All vectors must share one dimension (DimMismatch) and refs must be
    unique (DuplicateChunkRef); `provider_id` labels the whole index and
    queries against it are checked by callers against their embedder.
    """
    params = params or AnnParams()
    refs: list[ChunkRef] = []
    vectors: list[np.ndarray] = []
    seen: set[ChunkRef] = set()
    dim: int | None = None
    for item, vector in entries:
        ref = item.ref if isinstance(item, Chunk) else item
        if ref in seen:
            raise DuplicateChunkRef(f"duplicate chunk ref {ref.key()}")
        seen.add(ref)
        vector = np.asarray(vector, dtype=np.float32).reshape(-1)
        if dim is None:
            dim = vector.shape[0]
        elif vector.shape[0] != dim:
            raise DimMismatch(
                f"vector for {ref.key()} has dim {vector.shape[0]}, expected {dim}"
            )
        refs.append(ref)
        vectors.append(vector)
    if dim is None:
        raise ConfigError("cannot build an index from zero entries")
    units = _normalize_rows(np.stack(vectors))
    graph = None
    if params.mode == "hnsw":
        graph = _HnswGraph(units, params)
        graph.build()
    return VectorIndex(provider_id, refs, units, params, graph)


def query_chunks(index: VectorIndex, query_vec: np.ndarray, k: int) -> list[ChunkHit]:
    return index.query(query_vec, k)


def aggregate_documents(hits: Sequence[ChunkHit]) -> list[ScoredDocument]:
    """One document per distinct doc id, scored by its best chunk hit;
    sorted by score descending, doc_id ascending on ties."""
    best: dict[str, ChunkHit] = {}
    for hit in hits:
        current = best.get(hit.ref.doc_id)
        if current is None or hit.similarity > current.similarity:
            best[hit.ref.doc_id] = hit
    docs = [
        ScoredDocument(doc_id=doc_id, score=hit.similarity, best_chunk=hit)
        for doc_id, hit in best.items()
    ]
    docs.sort(key=lambda d: (-d.score, d.doc_id))
    return docs


def rerank_top_n(
    query: ClaimQuery,
    docs: Sequence[ScoredDocument],
    corpus: CorpusStore,
    embedder,
    scheme: WeightScheme | str = WeightScheme.TOKEN_PROPORTIONAL,
    counter_name: str = "reference",
) -> list[ScoredDocument]:
    """Re-score documents with the weighted paragraph-element method.

    Every paragraph of each document is embedded on the fly; the
    original first-stage score is kept alongside the new rerank_score.
    Raises DocNotFound when the corpus lacks a document's text.
    """
    element_texts = [e.text for e in query.elements] or [query.query_text]
    element_vecs = embedder.embed_batch(element_texts)
    weighting = make_weighting(element_texts, scheme, counter_name)
    reranked: list[ScoredDocument] = []
    for doc_score in docs:
        doc = corpus.get(doc_score.doc_id)
        if doc is None:
            raise DocNotFound(f"corpus has no text for {doc_score.doc_id}")
        paragraphs = [
            (section.name, p.number, p.text)
            for section in doc.sections
            for p in section.paragraphs
        ]
        if not paragraphs:
            logger.warning("document %s has no paragraphs; rerank score 0", doc.doc_id)
            reranked.append(replace(doc_score, rerank_score=0.0, per_element_best=[]))
            continue
        paragraph_vecs = embedder.embed_batch([text for _, _, text in paragraphs])
        score, per_element = weighted_paragraph_element_score(
            element_vecs, paragraph_vecs, weighting
        )
        table = [
            {
                "element_index": e,
                "section": paragraphs[p][0].value,
                "paragraph_number": paragraphs[p][1],
                "similarity": sim,
            }
            for e, (p, sim) in enumerate(per_element)
        ]
        reranked.append(
            replace(doc_score, rerank_score=score, per_element_best=table)
        )
    reranked.sort(key=lambda d: (-(d.rerank_score or 0.0), d.doc_id))
    return reranked
