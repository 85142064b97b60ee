"""Pairwise ranking evaluation: X-cited vs A-cited (hard) or random (easy).

One eval record pairs the resolved text of an X-cited document against
the text of an A-cited document (or a randomly drawn uncited corpus
document) for the same query claim.  A scorer wins a record when it puts
the X side strictly above the negative side; ties count as half wins, so
a constant scorer lands exactly on the 50% random baseline.

Reports can render a context table that includes published accuracy
figures from prior systems on these two tasks; those lines are reference
points only and are not reproducible here (they required the full EPO
search-report corpus and a fine-tuned model).
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

from .chunking import ChunkerConfig, chunk_document, chunk_passages
from .citations import Category, CitationRecord, EmptyResolution, resolve_passages
from .corpus import CorpusStore
from .dataset import Bucket, SplitAssignment, _stable_seed
from .errors import ClaimSearchError, ConfigError
from .scoring import (
    WeightScheme,
    make_weighting,
    max_chunk_claim_score,
    query_text_for_elements,
    weighted_paragraph_element_score,
)

logger = logging.getLogger(__name__)


class ScorerFailure(ClaimSearchError):
    """A scorer raised while scoring a record."""


class NegativeKind(str, Enum):
    A_CITATION = "a"
    RANDOM_DOC = "random"


@dataclass(frozen=True)
class EvalRecord:
    record_id: str
    query_doc_id: str
    query_claim_text: str
    query_elements: tuple[str, ...]
    x_doc_id: str
    x_texts: tuple[str, ...]
    negative_doc_id: str
    negative_texts: tuple[str, ...]
    negative_kind: NegativeKind

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "query_doc_id": self.query_doc_id,
            "query_claim_text": self.query_claim_text,
            "query_elements": list(self.query_elements),
            "x_doc_id": self.x_doc_id,
            "x_texts": list(self.x_texts),
            "negative_doc_id": self.negative_doc_id,
            "negative_texts": list(self.negative_texts),
            "negative_kind": self.negative_kind.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalRecord":
        return cls(
            record_id=data["record_id"],
            query_doc_id=data["query_doc_id"],
            query_claim_text=data["query_claim_text"],
            query_elements=tuple(data["query_elements"]),
            x_doc_id=data["x_doc_id"],
            x_texts=tuple(data["x_texts"]),
            negative_doc_id=data["negative_doc_id"],
            negative_texts=tuple(data["negative_texts"]),
            negative_kind=NegativeKind(data["negative_kind"]),
        )


# A scorer maps one record to (x_score, negative_score).
PairScorer = Callable[[EvalRecord], tuple[float, float]]


def build_eval_records(
    citations: Sequence[CitationRecord],
    corpus: CorpusStore,
    assignments: Sequence[SplitAssignment],
    config: ChunkerConfig,
    negative: NegativeKind = NegativeKind.A_CITATION,
    rng_seed: int = 0,
) -> tuple[list[EvalRecord], dict]:
    """Enumerate evaluation records over test-bucket subjects.

    For each subject claim, every (X document, A document) pair yields
    one record, deduplicated by document pair; citations of the same
    document are merged.  The random variant replaces the A side with a
    uniformly drawn corpus document that is not cited for that claim
    (seeded per subject).
    """
    counters = {
        "subjects_test": 0,
        "subjects_skipped_train": 0,
        "missing_subject": 0,
        "unresolvable_citations": 0,
        "records": 0,
    }
    bucket_of = {a.subject_doc_id: a.bucket for a in assignments}
    by_subject: dict[str, list[CitationRecord]] = {}
    for citation in citations:
        by_subject.setdefault(citation.subject_doc_id, []).append(citation)

    records: list[EvalRecord] = []
    all_doc_ids = corpus.doc_ids()
    for subject in sorted(by_subject):
        if bucket_of.get(subject) is not Bucket.TEST:
            counters["subjects_skipped_train"] += 1
            continue
        subject_doc = corpus.get(subject)
        claim_one = subject_doc.claim(1) if subject_doc else None
        if claim_one is None:
            counters["missing_subject"] += 1
            continue
        counters["subjects_test"] += 1
        sides: dict[Category, dict[str, list[str]]] = {Category.X: {}, Category.A: {}}
        for citation in by_subject[subject]:
            cited_doc = corpus.get(citation.cited_doc_id)
            if cited_doc is None:
                counters["unresolvable_citations"] += 1
                continue
            try:
                resolution = resolve_passages(citation, cited_doc)
            except EmptyResolution:
                counters["unresolvable_citations"] += 1
                continue
            chunks = chunk_passages(resolution.passages, config)
            texts = sides[citation.category].setdefault(citation.cited_doc_id, [])
            texts.extend(c.text for c in chunks)
        x_docs = sides[Category.X]
        elements = tuple(e.text for e in claim_one.elements)
        if negative is NegativeKind.A_CITATION:
            pairs = [
                (x_id, a_id)
                for x_id in sorted(x_docs)
                for a_id in sorted(sides[Category.A])
                if x_id != a_id
            ]
            for x_id, a_id in pairs:
                records.append(
                    EvalRecord(
                        record_id=f"{subject}|{x_id}|{a_id}",
                        query_doc_id=subject,
                        query_claim_text=claim_one.full_text,
                        query_elements=elements,
                        x_doc_id=x_id,
                        x_texts=tuple(x_docs[x_id]),
                        negative_doc_id=a_id,
                        negative_texts=tuple(sides[Category.A][a_id]),
                        negative_kind=negative,
                    )
                )
        else:
            cited_ids = {c.cited_doc_id for c in by_subject[subject]} | {subject}
            pool = [d for d in all_doc_ids if d not in cited_ids]
            if not pool:
                logger.warning("no uncited document available for %s", subject)
                continue
            rng = random.Random(_stable_seed(rng_seed, subject))
            n_pairs = max(len(sides[Category.A]), 1)
            for x_id in sorted(x_docs):
                for i in range(n_pairs):
                    neg_id = pool[rng.randrange(len(pool))]
                    neg_doc = corpus.get(neg_id)
                    neg_chunks = chunk_document(neg_doc, config)
                    records.append(
                        EvalRecord(
                            record_id=f"{subject}|{x_id}|random{i}",
                            query_doc_id=subject,
                            query_claim_text=claim_one.full_text,
                            query_elements=elements,
                            x_doc_id=x_id,
                            x_texts=tuple(x_docs[x_id]),
                            negative_doc_id=neg_id,
                            negative_texts=tuple(c.text for c in neg_chunks),
                            negative_kind=negative,
                        )
                    )
    counters["records"] = len(records)
    return records, counters


# ---------------------------------------------------------------------------
# Scorers
# ---------------------------------------------------------------------------


def make_max_chunk_scorer(
    embedder, token_budget: int = 512, counter_name: str = "reference"
) -> PairScorer:
    """Document score = max cosine between query claim and any chunk."""

    def scorer(record: EvalRecord) -> tuple[float, float]:
        elements = list(record.query_elements) or [record.query_claim_text]
        query_text, _ = query_text_for_elements(elements, token_budget, counter_name)
        query_vec = embedder.embed_text(query_text)

        def side(texts: tuple[str, ...]) -> float:
            if not texts:
                return 0.0
            score, _ = max_chunk_claim_score(query_vec, embedder.embed_batch(list(texts)))
            return score

        return side(record.x_texts), side(record.negative_texts)

    return scorer


def make_weighted_element_scorer(
    embedder,
    scheme: WeightScheme | str = WeightScheme.TOKEN_PROPORTIONAL,
    counter_name: str = "reference",
) -> PairScorer:
    """Document score = salience-weighted sum of per-element best
    similarity, with the record's text set as the paragraph units."""

    def scorer(record: EvalRecord) -> tuple[float, float]:
        elements = list(record.query_elements) or [record.query_claim_text]
        element_vecs = embedder.embed_batch(elements)
        weighting = make_weighting(elements, scheme, counter_name)

        def side(texts: tuple[str, ...]) -> float:
            if not texts:
                return 0.0
            score, _ = weighted_paragraph_element_score(
                element_vecs, embedder.embed_batch(list(texts)), weighting
            )
            return score

        return side(record.x_texts), side(record.negative_texts)

    return scorer


# ---------------------------------------------------------------------------
# Accuracy protocol and report
# ---------------------------------------------------------------------------

# Published accuracy figures for prior systems on the X/A ("hard") and
# X/random ("easy") pairwise tasks.  Context lines only: different
# evaluation sets, different models, not reproducible at desk scale.
PUBLISHED_BASELINES: tuple[tuple[str, float | None, float | None], ...] = (
    ("PatentMatch balanced (2021, published)", 0.54, None),
    ("SearchFormer (2023, published)", 0.5385, 0.9804),
    ("IP Rally (2021, published)", 0.58, None),
    ("Max chunk-claim, patent BERT CLS (published)", 0.5389, None),
    ("Max chunk-claim, fine-tuned claim-chunk model (published)", 0.6305, 0.9961),
    ("Weighted paragraph-element, fine-tuned claim-chunk model (published)", 0.6046, None),
    ("GPT-4o, model-internal data only (published)", 0.5275, None),
    ("GPT-4o, full-text upload (published)", 0.5917, None),
)


@dataclass
class EvalReport:
    method: str
    negative_kind: NegativeKind
    n_records: int
    wins: int
    ties: int
    accuracy: float
    margins: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "negative_kind": self.negative_kind.value,
            "n_records": self.n_records,
            "wins": self.wins,
            "ties": self.ties,
            "accuracy": self.accuracy,
            "margins": self.margins,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=2)

    def render_table(self, include_reference: bool = True) -> str:
        """Text table in the two-task accuracy layout."""
        width = 66
        lines = [
            f"{'Method':<{width}} {'X/A':>8} {'X/Random':>9}",
            "-" * (width + 19),
        ]

        def fmt(value: float | None) -> str:
            return f"{value * 100:.2f}%" if value is not None else "-"

        if include_reference:
            for label, xa, xrandom in PUBLISHED_BASELINES:
                lines.append(f"{label:<{width}} {fmt(xa):>8} {fmt(xrandom):>9}")
            lines.append("-" * (width + 19))
        xa = self.accuracy if self.negative_kind is NegativeKind.A_CITATION else None
        xrandom = self.accuracy if self.negative_kind is NegativeKind.RANDOM_DOC else None
        label = f"{self.method} (this run, n={self.n_records})"
        lines.append(f"{label:<{width}} {fmt(xa):>8} {fmt(xrandom):>9}")
        if include_reference:
            lines.append(
                "Published lines are prior results on other evaluation sets; they"
            )
            lines.append(
                "are context only and not reproducible without the bulk corpora"
            )
            lines.append("and the fine-tuned model. Random baseline is 50%.")
        return "\n".join(lines)


def pairwise_accuracy(
    records: Sequence[EvalRecord], scorer: PairScorer, method: str = "custom"
) -> EvalReport:
    """Score every record; a win is score(X) > score(negative), a tie
    counts as half a win and is reported separately."""
    if not records:
        raise ConfigError("no records to evaluate")
    kinds = {r.negative_kind for r in records}
    if len(kinds) > 1:
        raise ConfigError(f"records mix negative kinds {sorted(k.value for k in kinds)}")
    wins = 0
    ties = 0
    margins: list[dict] = []
    for record in records:
        try:
            x_score, negative_score = scorer(record)
        except Exception as exc:
            raise ScorerFailure(f"scorer failed on record {record.record_id}: {exc}") from exc
        if x_score > negative_score:
            wins += 1
        elif x_score == negative_score:
            ties += 1
        margins.append(
            {
                "record_id": record.record_id,
                "x_score": x_score,
                "negative_score": negative_score,
                "margin": x_score - negative_score,
            }
        )
    accuracy = (wins + 0.5 * ties) / len(records)
    return EvalReport(
        method=method,
        negative_kind=next(iter(kinds)),
        n_records=len(records),
        wins=wins,
        ties=ties,
        accuracy=accuracy,
        margins=margins,
    )


def write_eval_records_jsonl(records: Sequence[EvalRecord], path: str | Path) -> int:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")
    return len(records)


def read_eval_records_jsonl(path: str | Path) -> list[EvalRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(EvalRecord.from_dict(json.loads(line)))
    return out
