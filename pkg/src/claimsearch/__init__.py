"""Patent claim search: parsing, contrastive datasets, vector retrieval."""

from .chunking import Chunk, ChunkerConfig, ChunkRef, chunk_document, chunk_passages
from .citations import (
    Category,
    CitationRecord,
    PassageKind,
    PassageRef,
    load_citations,
    parse_passage_field,
    resolve_passages,
)
from .corpus import (
    Claim,
    ClaimElement,
    CorpusStore,
    Jurisdiction,
    Paragraph,
    PatentDocument,
    Section,
    SectionName,
    flatten_claim_elements,
    parse_application,
)
from .dataset import (
    Bucket,
    PairOrigin,
    PairRecord,
    SplitAssignment,
    build_dataset,
    mirror_a_positive,
    pair_xa_chunks,
    split_by_subject,
)
from .embed import EmbedderConfig, ReferenceEmbedder, RemoteEmbedder, make_embedder
from .errors import ClaimSearchError, ConfigError, DimMismatch
from .evalharness import (
    EvalRecord,
    EvalReport,
    NegativeKind,
    build_eval_records,
    pairwise_accuracy,
)
from .index import (
    AnnParams,
    ChunkHit,
    VectorIndex,
    aggregate_documents,
    build_index,
    query_chunks,
    rerank_top_n,
)
from .scoring import (
    ClaimQuery,
    ElementWeighting,
    ScoredDocument,
    WeightScheme,
    cosine,
    make_claim_query,
    max_chunk_claim_score,
    weighted_paragraph_element_score,
)
from .service import SearchEngine, SearchRequest, make_server

__version__ = "0.1.0"

__all__ = [
    "AnnParams",
    "Bucket",
    "Category",
    "Chunk",
    "ChunkHit",
    "ChunkRef",
    "ChunkerConfig",
    "Claim",
    "ClaimElement",
    "ClaimQuery",
    "ClaimSearchError",
    "CitationRecord",
    "ConfigError",
    "CorpusStore",
    "DimMismatch",
    "ElementWeighting",
    "EmbedderConfig",
    "EvalRecord",
    "EvalReport",
    "Jurisdiction",
    "NegativeKind",
    "PairOrigin",
    "PairRecord",
    "Paragraph",
    "PassageKind",
    "PassageRef",
    "PatentDocument",
    "ReferenceEmbedder",
    "RemoteEmbedder",
    "ScoredDocument",
    "SearchEngine",
    "SearchRequest",
    "Section",
    "SectionName",
    "SplitAssignment",
    "VectorIndex",
    "WeightScheme",
    "aggregate_documents",
    "build_dataset",
    "build_eval_records",
    "build_index",
    "chunk_document",
    "chunk_passages",
    "cosine",
    "flatten_claim_elements",
    "load_citations",
    "make_claim_query",
    "make_embedder",
    "make_server",
    "max_chunk_claim_score",
    "mirror_a_positive",
    "pair_xa_chunks",
    "pairwise_accuracy",
    "parse_application",
    "parse_passage_field",
    "query_chunks",
    "resolve_passages",
    "rerank_top_n",
    "split_by_subject",
    "weighted_paragraph_element_score",
]
