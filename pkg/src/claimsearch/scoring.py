"""Document-versus-claim similarity scoring.

Two aggregations over cosine similarity of embedding vectors:

  - max chunk-claim: the document score is the maximum similarity of any
    of its chunks to the (possibly truncated) query claim.
  - weighted paragraph-element: each claim element is scored by its best
    paragraph, and the document score is the salience-weighted sum of
    the element scores.  The default salience weighting is proportional
    to element token counts; uniform and caller-supplied weights are the
    alternatives.

Claims longer than the token budget keep only their trailing elements
(whole-element suffix); a single over-budget element keeps its last
`budget` tokens.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .corpus import Claim, ClaimElement
from .errors import ClaimSearchError, DimMismatch
from .tokenizer import get_token_counter


class EmptyClaim(ClaimSearchError):
    """The claim has no elements to score."""


class NoChunks(ClaimSearchError):
    """No chunk vectors were supplied."""


class NoElements(ClaimSearchError):
    """No element vectors were supplied."""


class NoParagraphs(ClaimSearchError):
    """No paragraph vectors were supplied."""


class WeightMisalignment(ClaimSearchError):
    """Weights do not line up with the claim elements."""


def cosine(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity; zero vectors compare as 0.0 by definition."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimMismatch(f"dims differ: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return matrix / safe


@dataclass(frozen=True)
class ClaimQuery:
    claim_text: str
    elements: tuple[ClaimElement, ...]
    query_text: str
    token_budget: int
    truncated: bool = False


def query_text_for_elements(
    element_texts: Sequence[str], token_budget: int, counter_name: str = "reference"
) -> tuple[str, bool]:
    """Join elements; drop leading ones until the suffix fits the budget."""
    counter = get_token_counter(counter_name)
    full = " ".join(element_texts)
    if counter.count(full) <= token_budget:
        return full, False
    for i in range(1, len(element_texts)):
        suffix = " ".join(element_texts[i:])
        if counter.count(suffix) <= token_budget:
            return suffix, True
    return counter.tail(element_texts[-1], token_budget), True


def make_claim_query(
    claim: Claim, token_budget: int, counter_name: str = "reference"
) -> ClaimQuery:
    if not claim.elements:
        raise EmptyClaim(f"claim {claim.number} has no elements")
    texts = [e.text for e in claim.elements]
    query_text, truncated = query_text_for_elements(texts, token_budget, counter_name)
    return ClaimQuery(
        claim_text=claim.full_text,
        elements=tuple(claim.elements),
        query_text=query_text,
        token_budget=token_budget,
        truncated=truncated,
    )


class WeightScheme(str, Enum):
    TOKEN_PROPORTIONAL = "token_proportional"
    UNIFORM = "uniform"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ElementWeighting:
    scheme: WeightScheme
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.weights:
            raise WeightMisalignment("weighting has no weights")
        if any(w < 0.0 for w in self.weights):
            raise WeightMisalignment("weights must be non-negative")
        total = sum(self.weights)
        if abs(total - 1.0) > 1e-9:
            raise WeightMisalignment(f"weights sum to {total!r}, expected 1")

    @classmethod
    def uniform(cls, n_elements: int) -> "ElementWeighting":
        if n_elements < 1:
            raise WeightMisalignment("need at least one element")
        return cls(WeightScheme.UNIFORM, tuple([1.0 / n_elements] * n_elements))

    @classmethod
    def token_proportional(
        cls, element_texts: Sequence[str], counter_name: str = "reference"
    ) -> "ElementWeighting":
        counter = get_token_counter(counter_name)
        counts = [counter.count(t) for t in element_texts]
        total = sum(counts)
        if total == 0:
            return cls.uniform(len(element_texts))
        weights = tuple(c / total for c in counts)
        return cls(WeightScheme.TOKEN_PROPORTIONAL, weights)

    @classmethod
    def custom(cls, weights: Sequence[float]) -> "ElementWeighting":
        return cls(WeightScheme.CUSTOM, tuple(float(w) for w in weights))


def make_weighting(
    element_texts: Sequence[str],
    scheme: WeightScheme | str = WeightScheme.TOKEN_PROPORTIONAL,
    counter_name: str = "reference",
    custom_weights: Sequence[float] | None = None,
) -> ElementWeighting:
    scheme = WeightScheme(scheme)
    if scheme is WeightScheme.TOKEN_PROPORTIONAL:
        return ElementWeighting.token_proportional(element_texts, counter_name)
    if scheme is WeightScheme.UNIFORM:
        return ElementWeighting.uniform(len(element_texts))
    if custom_weights is None:
        raise WeightMisalignment("custom scheme requires explicit weights")
    return ElementWeighting.custom(custom_weights)


def max_chunk_claim_score(
    query_vec: np.ndarray, chunk_vecs: Sequence[np.ndarray] | np.ndarray
) -> tuple[float, int]:
    """Maximum cosine between the query and any chunk; ties pick the
    lowest index."""
    matrix = np.asarray(chunk_vecs, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1) if matrix.size else matrix.reshape(0, 0)
    if matrix.shape[0] == 0:
        raise NoChunks("no chunk vectors supplied")
    query = np.asarray(query_vec, dtype=np.float64)
    if matrix.shape[1] != query.shape[0]:
        raise DimMismatch(f"dims differ: {matrix.shape[1]} vs {query.shape[0]}")
    qn = float(np.linalg.norm(query))
    q_unit = query / qn if qn else query
    sims = _unit_rows(matrix) @ q_unit
    best = int(np.argmax(sims))
    return float(sims[best]), best


def weighted_paragraph_element_score(
    element_vecs: Sequence[np.ndarray] | np.ndarray,
    paragraph_vecs: Sequence[np.ndarray] | np.ndarray,
    weighting: ElementWeighting,
) -> tuple[float, list[tuple[int, float]]]:
    """Per-element best-paragraph similarity, combined by salience weight.

    Returns the document score and, per element, the (paragraph index,
    similarity) of its best paragraph (lowest index on ties).
    """
    elements = np.asarray(element_vecs, dtype=np.float64)
    paragraphs = np.asarray(paragraph_vecs, dtype=np.float64)
    if elements.ndim != 2 or elements.shape[0] == 0:
        raise NoElements("no element vectors supplied")
    if paragraphs.ndim != 2 or paragraphs.shape[0] == 0:
        raise NoParagraphs("no paragraph vectors supplied")
    if elements.shape[1] != paragraphs.shape[1]:
        raise DimMismatch(
            f"dims differ: {elements.shape[1]} vs {paragraphs.shape[1]}"
        )
    if len(weighting.weights) != elements.shape[0]:
        raise WeightMisalignment(
            f"{len(weighting.weights)} weights for {elements.shape[0]} elements"
        )
    sims = _unit_rows(elements) @ _unit_rows(paragraphs).T
    best_indices = np.argmax(sims, axis=1)
    per_element_best = [
        (int(p), float(sims[e, p])) for e, p in enumerate(best_indices)
    ]
    score = float(
        sum(w * s for w, (_, s) in zip(weighting.weights, per_element_best))
    )
    return score, per_element_best


@dataclass
class ScoredDocument:
    doc_id: str
    score: float
    best_chunk: object | None = None  # ChunkHit from the index module
    per_element_best: list[dict] | None = None
    rerank_score: float | None = None

    @property
    def effective_score(self) -> float:
        return self.rerank_score if self.rerank_score is not None else self.score
