"""Contrastive training/evaluation record construction.

For every subject claim the resolved X- and A-cited texts are chunked,
then paired X-over-A in document order, using each chunk at most once:
min(|X|, |A|) records per claim.  A mirrored anti-bias set reuses each
paired A chunk as the positive with a random X chunk from a *different*
subject claim as the negative, so a model cannot win by learning that
some chunks are inherently positive or negative.  Subjects are split
80/20 train/test by subject application id: a subject appears in exactly
one bucket.

Everything is deterministic for a fixed seed; the mirror sampler derives
a per-subject seed from the global one so per-claim work can run in
parallel without changing the output.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .chunking import Chunk, ChunkerConfig, ChunkRef, chunk_passages
from .citations import Category, CitationRecord, EmptyResolution, resolve_passages
from .corpus import CorpusStore
from .errors import ClaimSearchError, ConfigError

logger = logging.getLogger(__name__)


class PoolTooSmall(ClaimSearchError):
    """No X chunk from a different subject exists for mirroring."""


class DegenerateSplit(ClaimSearchError):
    """A split bucket would be empty although there are >= 2 subjects."""


class PairOrigin(str, Enum):
    X_OVER_A = "XOverA"
    MIRRORED_A_OVER_RANDOM_X = "MirroredAOverRandomX"


class Bucket(str, Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class PairRecord:
    record_id: str
    query_claim_text: str
    query_doc_id: str
    positive_text: str
    negative_text: str
    origin: PairOrigin
    positive_ref: ChunkRef
    negative_ref: ChunkRef
    bucket: Bucket | None = None

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "query_claim_text": self.query_claim_text,
            "query_doc_id": self.query_doc_id,
            "positive_text": self.positive_text,
            "negative_text": self.negative_text,
            "origin": self.origin.value,
            "positive_ref": self.positive_ref.to_dict(),
            "negative_ref": self.negative_ref.to_dict(),
            "bucket": self.bucket.value if self.bucket else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PairRecord":
        return cls(
            record_id=data["record_id"],
            query_claim_text=data["query_claim_text"],
            query_doc_id=data["query_doc_id"],
            positive_text=data["positive_text"],
            negative_text=data["negative_text"],
            origin=PairOrigin(data["origin"]),
            positive_ref=ChunkRef.from_dict(data["positive_ref"]),
            negative_ref=ChunkRef.from_dict(data["negative_ref"]),
            bucket=Bucket(data["bucket"]) if data.get("bucket") else None,
        )


@dataclass(frozen=True)
class SplitAssignment:
    subject_doc_id: str
    bucket: Bucket


@dataclass
class ClaimChunkSet:
    """All X and A chunks gathered for one subject claim."""

    subject_doc_id: str
    claim_text: str
    x_chunks: list[Chunk] = field(default_factory=list)
    a_chunks: list[Chunk] = field(default_factory=list)


def _stable_seed(global_seed: int, subject_doc_id: str) -> int:
    digest = hashlib.blake2b(
        f"{global_seed}:{subject_doc_id}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def pair_xa_chunks(
    claim_text: str,
    x_chunks: Sequence[Chunk],
    a_chunks: Sequence[Chunk],
    query_doc_id: str = "",
) -> list[PairRecord]:
    """Zip X and A chunks in document order: min(|X|, |A|) records.

    Each chunk is used at most once.  The rare degenerate pair whose two
    texts are identical is dropped (a record must rank one text above
    the other).
    """
    records: list[PairRecord] = []
    for i, (x, a) in enumerate(zip(x_chunks, a_chunks)):
        if x.text == a.text:
            logger.warning(
                "identical X/A chunk texts for %s pair %d; dropped", query_doc_id, i
            )
            continue
        records.append(
            PairRecord(
                record_id=f"{query_doc_id or 'q'}|xa|{i:04d}",
                query_claim_text=claim_text,
                query_doc_id=query_doc_id,
                positive_text=x.text,
                negative_text=a.text,
                origin=PairOrigin.X_OVER_A,
                positive_ref=x.ref,
                negative_ref=a.ref,
            )
        )
    return records


def mirror_a_positive(
    claim_sets: Sequence[ClaimChunkSet], rng_seed: int
) -> list[PairRecord]:
    """Anti-bias records: paired A chunks as positives vs foreign X negatives.

    One record per A chunk that was used in X/A pairing; the negative is
    drawn uniformly from the X chunks of the *other* subjects.  Raises
    PoolTooSmall when a claim has no foreign X chunk to draw from.
    """
    pool: list[tuple[str, Chunk]] = [
        (cs.subject_doc_id, chunk) for cs in claim_sets for chunk in cs.x_chunks
    ]
    records: list[PairRecord] = []
    for cs in claim_sets:
        used = min(len(cs.x_chunks), len(cs.a_chunks))
        if used == 0:
            continue
        foreign = [chunk for subject, chunk in pool if subject != cs.subject_doc_id]
        if not foreign:
            raise PoolTooSmall(
                f"no X chunk from a different subject available for {cs.subject_doc_id}"
            )
        rng = random.Random(_stable_seed(rng_seed, cs.subject_doc_id))
        for j, a_chunk in enumerate(cs.a_chunks[:used]):
            negative = foreign[rng.randrange(len(foreign))]
            for _ in range(8):
                if negative.text != a_chunk.text:
                    break
                negative = foreign[rng.randrange(len(foreign))]
            if negative.text == a_chunk.text:
                logger.warning(
                    "could not draw a distinct negative for %s mirror %d; dropped",
                    cs.subject_doc_id,
                    j,
                )
                continue
            records.append(
                PairRecord(
                    record_id=f"{cs.subject_doc_id}|mir|{j:04d}",
                    query_claim_text=cs.claim_text,
                    query_doc_id=cs.subject_doc_id,
                    positive_text=a_chunk.text,
                    negative_text=negative.text,
                    origin=PairOrigin.MIRRORED_A_OVER_RANDOM_X,
                    positive_ref=a_chunk.ref,
                    negative_ref=negative.ref,
                )
            )
    return records


def split_by_subject(
    subject_ids: Iterable[str], train_fraction: float, rng_seed: int
) -> list[SplitAssignment]:
    """Assign every subject id to train or test, disjoint and exhaustive.

    The train bucket gets round(train_fraction * n) ids.  A single
    subject goes to train with a warning; with n >= 2 a split that would
    leave a bucket empty raises DegenerateSplit.
    """
    ids = sorted(set(subject_ids))
    n = len(ids)
    if n == 0:
        raise ConfigError("subject id set is empty")
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if n == 1:
        logger.warning("single subject %s assigned to train", ids[0])
        return [SplitAssignment(ids[0], Bucket.TRAIN)]
    n_train = int(train_fraction * n + 0.5)
    if n_train == 0 or n_train == n:
        raise DegenerateSplit(
            f"train_fraction {train_fraction} over {n} subjects leaves a bucket empty"
        )
    shuffled = list(ids)
    random.Random(rng_seed).shuffle(shuffled)
    train = set(shuffled[:n_train])
    return [
        SplitAssignment(sid, Bucket.TRAIN if sid in train else Bucket.TEST)
        for sid in ids
    ]


# ---------------------------------------------------------------------------
# Build pipeline
# ---------------------------------------------------------------------------

_LENGTH_BINS = (0, 1000, 2000, 3000, 5000, 10000)
_SHORT_CITATION_CHARS = 3000


@dataclass
class DatasetBuildResult:
    records: list[PairRecord]
    assignments: list[SplitAssignment]
    claim_sets: list[ClaimChunkSet]
    stats: dict
    discards: list[dict]


def _length_bin(n_chars: int) -> str:
    for lo, hi in zip(_LENGTH_BINS, _LENGTH_BINS[1:]):
        if lo <= n_chars < hi:
            return f"{lo}-{hi}"
    return f">={_LENGTH_BINS[-1]}"


def build_dataset(
    citations: Sequence[CitationRecord],
    corpus: CorpusStore,
    config: ChunkerConfig,
    train_fraction: float = 0.8,
    rng_seed: int = 0,
) -> DatasetBuildResult:
    """Run citations through resolution, chunking, pairing and splitting.

    Besides the records, the result carries a stats sidecar with funnel
    counters and the per-category length/jurisdiction diagnostics that
    make shortcut-learning risk visible (A citations skew shorter and
    more often toward EP documents; no re-balancing is applied, the
    mirrored record set is the mitigation).
    """
    counters = {
        "citations_x": 0,
        "citations_a": 0,
        "missing_subject_doc": 0,
        "missing_subject_claim_one": 0,
        "missing_cited_doc": 0,
        "empty_resolution": 0,
        "skipped_passage_numbers": 0,
    }
    length_hist: dict[str, dict[str, int]] = {"X": {}, "A": {}}
    short_counts = {"X": 0, "A": 0}
    ep_counts = {"X": 0, "A": 0}
    resolved_counts = {"X": 0, "A": 0}
    discards: list[dict] = []

    by_subject: dict[str, list[CitationRecord]] = {}
    for citation in citations:
        by_subject.setdefault(citation.subject_doc_id, []).append(citation)
        key = "citations_x" if citation.category is Category.X else "citations_a"
        counters[key] += 1

    claim_sets: list[ClaimChunkSet] = []
    for subject in sorted(by_subject):
        subject_doc = corpus.get(subject)
        if subject_doc is None:
            counters["missing_subject_doc"] += 1
            discards.append({"subject_doc_id": subject, "reason": "subject not in corpus"})
            continue
        claim_one = subject_doc.claim(1)
        if claim_one is None:
            counters["missing_subject_claim_one"] += 1
            discards.append({"subject_doc_id": subject, "reason": "subject has no claim 1"})
            continue
        claim_set = ClaimChunkSet(subject_doc_id=subject, claim_text=claim_one.full_text)
        for citation in by_subject[subject]:
            cited_doc = corpus.get(citation.cited_doc_id)
            if cited_doc is None:
                counters["missing_cited_doc"] += 1
                discards.append(
                    {
                        "subject_doc_id": subject,
                        "cited_doc_id": citation.cited_doc_id,
                        "reason": "cited document not in corpus",
                    }
                )
                continue
            try:
                resolution = resolve_passages(citation, cited_doc)
            except EmptyResolution:
                counters["empty_resolution"] += 1
                discards.append(
                    {
                        "subject_doc_id": subject,
                        "cited_doc_id": citation.cited_doc_id,
                        "reason": "no passage resolved",
                    }
                )
                continue
            counters["skipped_passage_numbers"] += len(resolution.skipped)
            chunks = chunk_passages(resolution.passages, config)
            category = citation.category.value
            resolved_counts[category] += 1
            total_chars = sum(len(p.text) for p in resolution.passages)
            bin_label = _length_bin(total_chars)
            length_hist[category][bin_label] = length_hist[category].get(bin_label, 0) + 1
            if total_chars < _SHORT_CITATION_CHARS:
                short_counts[category] += 1
            if cited_doc.jurisdiction.value == "EP":
                ep_counts[category] += 1
            if citation.category is Category.X:
                claim_set.x_chunks.extend(chunks)
            else:
                claim_set.a_chunks.extend(chunks)
        claim_sets.append(claim_set)

    xa_records: list[PairRecord] = []
    for cs in claim_sets:
        xa_records.extend(
            pair_xa_chunks(cs.claim_text, cs.x_chunks, cs.a_chunks, cs.subject_doc_id)
        )
    try:
        mirrored_records = mirror_a_positive(claim_sets, rng_seed)
    except PoolTooSmall as exc:
        logger.warning("mirroring skipped: %s", exc)
        mirrored_records = []

    subjects = [cs.subject_doc_id for cs in claim_sets]
    assignments = split_by_subject(subjects, train_fraction, rng_seed) if subjects else []
    bucket_of = {a.subject_doc_id: a.bucket for a in assignments}

    records = [
        replace(record, bucket=bucket_of[record.query_doc_id])
        for record in xa_records + mirrored_records
    ]

    def share(counts: dict[str, int], total: dict[str, int], key: str) -> float | None:
        return counts[key] / total[key] if total[key] else None

    stats = {
        "counters": counters,
        "records": {
            "x_over_a": len(xa_records),
            "mirrored": len(mirrored_records),
            "total": len(records),
        },
        "subjects": {
            "total": len(subjects),
            "train": sum(1 for a in assignments if a.bucket is Bucket.TRAIN),
            "test": sum(1 for a in assignments if a.bucket is Bucket.TEST),
        },
        "category_diagnostics": {
            "resolved_citations": resolved_counts,
            "length_histogram_chars": {
                key: dict(sorted(value.items())) for key, value in length_hist.items()
            },
            "short_citation_share": {
                "X": share(short_counts, resolved_counts, "X"),
                "A": share(short_counts, resolved_counts, "A"),
            },
            "ep_share": {
                "X": share(ep_counts, resolved_counts, "X"),
                "A": share(ep_counts, resolved_counts, "A"),
            },
        },
        "config": {
            "max_seq_length": config.max_seq_length,
            "token_counter": config.token_counter,
            "train_fraction": train_fraction,
            "rng_seed": rng_seed,
        },
    }
    return DatasetBuildResult(
        records=records,
        assignments=assignments,
        claim_sets=claim_sets,
        stats=stats,
        discards=discards,
    )


def write_dataset(result: DatasetBuildResult, out_dir: str | Path) -> dict[str, Path]:
    """Write records.jsonl, stats.json and discards.jsonl into `out_dir`.

    Output is byte-identical across runs with identical inputs and seed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "records": out / "records.jsonl",
        "stats": out / "stats.json",
        "discards": out / "discards.jsonl",
    }
    with open(paths["records"], "w", encoding="utf-8") as fh:
        for record in result.records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")
    with open(paths["stats"], "w", encoding="utf-8") as fh:
        json.dump(result.stats, fh, sort_keys=True, ensure_ascii=False, indent=2)
        fh.write("\n")
    with open(paths["discards"], "w", encoding="utf-8") as fh:
        for entry in result.discards:
            fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False))
            fh.write("\n")
    return paths


def read_records_jsonl(path: str | Path) -> list[PairRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(PairRecord.from_dict(json.loads(line)))
    return out
