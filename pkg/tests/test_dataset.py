"""Pairing, mirroring, splitting and the dataset build pipeline."""

from __future__ import annotations

import json
import random

import pytest

from claimsearch.chunking import Chunk, ChunkerConfig
from claimsearch.citations import Category, CitationRecord, PassageKind, PassageRef
from claimsearch.corpus import CorpusStore, Jurisdiction, SectionName
from claimsearch.dataset import (
    Bucket,
    ClaimChunkSet,
    DegenerateSplit,
    PairOrigin,
    PoolTooSmall,
    SplitAssignment,
    build_dataset,
    mirror_a_positive,
    pair_xa_chunks,
    read_records_jsonl,
    split_by_subject,
    write_dataset,
)
from claimsearch.errors import ConfigError

from conftest import make_document, words


def chunk(doc_id, text, number=1, section=SectionName.DESCRIPTION):
    return Chunk(
        doc_id=doc_id,
        section=section,
        paragraph_numbers=(number,),
        text=text,
        token_count=max(1, len(text.split())),
    )


def chunk_run(doc_id, count, tag):
    return [chunk(doc_id, f"{tag} {i} text", number=i + 1) for i in range(count)]


class TestPairing:
    def test_five_x_three_a_gives_three_records(self):
        records = pair_xa_chunks(
            "claim text", chunk_run("X1", 5, "x"), chunk_run("A1", 3, "a"), "S1"
        )
        assert len(records) == 3
        assert all(r.origin is PairOrigin.X_OVER_A for r in records)

    def test_no_x_side_gives_no_records(self):
        assert pair_xa_chunks("c", [], chunk_run("A1", 4, "a"), "S1") == []

    def test_two_by_two_uses_every_chunk_once(self):
        x_side, a_side = chunk_run("X1", 2, "x"), chunk_run("A1", 2, "a")
        records = pair_xa_chunks("c", x_side, a_side, "S1")
        assert len(records) == 2
        used = {r.positive_ref for r in records} | {r.negative_ref for r in records}
        assert used == {c.ref for c in x_side} | {c.ref for c in a_side}

    def test_pairing_law_over_random_sizes(self):
        rng = random.Random(5)
        for case in range(1000):
            nx, na = rng.randint(0, 50), rng.randint(0, 50)
            x_side = chunk_run("X1", nx, f"x{case}")
            a_side = chunk_run("A1", na, f"a{case}")
            records = pair_xa_chunks("c", x_side, a_side, "S1")
            assert len(records) == min(nx, na)
            refs = [r.positive_ref for r in records] + [r.negative_ref for r in records]
            assert len(refs) == len(set(refs))  # at most once

    def test_positive_never_equals_negative(self):
        records = pair_xa_chunks(
            "c", [chunk("X1", "same text")], [chunk("A1", "same text")], "S1"
        )
        assert records == []


class TestMirroring:
    def _sets(self):
        return [
            ClaimChunkSet("S1", "claim one", chunk_run("X1", 2, "s1x"), chunk_run("A1", 2, "s1a")),
            ClaimChunkSet("S2", "claim two", chunk_run("X2", 3, "s2x"), chunk_run("A2", 1, "s2a")),
        ]

    def test_negative_subject_always_differs(self):
        records = mirror_a_positive(self._sets(), rng_seed=1)
        assert len(records) == 3  # 2 used A chunks for S1, 1 for S2
        by_subject = {"S1": "X2", "S2": "X1"}
        for record in records:
            assert record.origin is PairOrigin.MIRRORED_A_OVER_RANDOM_X
            assert record.negative_ref.doc_id == by_subject[record.query_doc_id]

    def test_fixed_seed_reproduces_records(self):
        a = mirror_a_positive(self._sets(), rng_seed=42)
        b = mirror_a_positive(self._sets(), rng_seed=42)
        assert a == b

    def test_different_seed_can_differ(self):
        baseline = mirror_a_positive(self._sets(), rng_seed=0)
        assert any(
            mirror_a_positive(self._sets(), rng_seed=seed) != baseline
            for seed in range(1, 30)
        )

    def test_single_subject_pool_raises(self):
        sets = [
            ClaimChunkSet("S1", "c", chunk_run("X1", 2, "x"), chunk_run("A1", 1, "a"))
        ]
        with pytest.raises(PoolTooSmall):
            mirror_a_positive(sets, rng_seed=0)

    def test_claims_without_used_a_chunks_emit_nothing(self):
        sets = [
            ClaimChunkSet("S1", "c", chunk_run("X1", 2, "x"), []),
            ClaimChunkSet("S2", "c", chunk_run("X2", 1, "x"), chunk_run("A2", 1, "a")),
        ]
        records = mirror_a_positive(sets, rng_seed=0)
        assert [r.query_doc_id for r in records] == ["S2"]


class TestSplit:
    def test_ten_ids_at_080_gives_eight_two(self):
        assignments = split_by_subject([f"S{i}" for i in range(10)], 0.8, rng_seed=3)
        train = [a for a in assignments if a.bucket is Bucket.TRAIN]
        test = [a for a in assignments if a.bucket is Bucket.TEST]
        assert len(train) == 8 and len(test) == 2

    def test_single_id_goes_to_train_with_warning(self, caplog):
        with caplog.at_level("WARNING"):
            assignments = split_by_subject(["only"], 0.8, rng_seed=0)
        assert assignments == [SplitAssignment("only", Bucket.TRAIN)]
        assert "single subject" in caplog.text

    def test_seeded_determinism(self):
        ids = [f"S{i:03d}" for i in range(100)]
        assert split_by_subject(ids, 0.8, 7) == split_by_subject(ids, 0.8, 7)

    def test_disjoint_and_exhaustive_over_random_sets(self):
        rng = random.Random(13)
        for _ in range(200):
            n = rng.randint(3, 200)
            ids = {f"D{rng.randrange(10_000):05d}" for _ in range(n)}
            assignments = split_by_subject(ids, 0.8, rng.randrange(1000))
            train = {a.subject_doc_id for a in assignments if a.bucket is Bucket.TRAIN}
            test = {a.subject_doc_id for a in assignments if a.bucket is Bucket.TEST}
            assert train & test == set()
            assert train | test == ids
            assert len(train) == int(0.8 * len(ids) + 0.5)

    def test_degenerate_split_raises(self):
        with pytest.raises(DegenerateSplit):
            split_by_subject(["a", "b"], 0.9, 0)  # round(1.8) = 2 -> empty test

    def test_invalid_fraction(self):
        with pytest.raises(ConfigError):
            split_by_subject(["a", "b"], 1.0, 0)
        with pytest.raises(ConfigError):
            split_by_subject([], 0.5, 0)


def _pipeline_fixture():
    """Four subjects, each citing one X and one A document."""
    corpus_docs = []
    citations = []
    for i in range(4):
        subject = f"US10{i}"
        x_doc = f"US90{i}"
        a_doc = f"EP80{i}"
        corpus_docs.append(
            make_document(
                subject,
                sections=[(SectionName.DESCRIPTION, [(1, words(f"sub{i}body", 10))])],
                claims=[(1, [f"A subject {i} device comprising:", words(f"sub{i}claim", 8)])],
            )
        )
        corpus_docs.append(
            make_document(
                x_doc,
                sections=[
                    (SectionName.ABSTRACT, [(1, words(f"x{i}abs", 6))]),
                    (SectionName.DESCRIPTION, [(n, words(f"x{i}p{n}", 12)) for n in (1, 2)]),
                ],
            )
        )
        corpus_docs.append(
            make_document(
                a_doc,
                sections=[
                    (SectionName.DESCRIPTION, [(n, words(f"a{i}p{n}", 9)) for n in (1, 2)]),
                ],
                jurisdiction=Jurisdiction.EP,
            )
        )
        citations.append(
            CitationRecord(subject, 1, Category.X, x_doc, [
                PassageRef(PassageKind.ABSTRACT),
                PassageRef(PassageKind.PARAGRAPH_RANGE, 1, 2),
            ])
        )
        citations.append(
            CitationRecord(subject, 1, Category.A, a_doc, [
                PassageRef(PassageKind.PARAGRAPH_RANGE, 1, 2),
            ])
        )
    return citations, CorpusStore(corpus_docs)


class TestBuildPipeline:
    def test_build_and_write_dataset(self, tmp_path):
        citations, corpus = _pipeline_fixture()
        config = ChunkerConfig(max_seq_length=64)
        result = build_dataset(citations, corpus, config, 0.8, rng_seed=9)
        assert result.stats["records"]["x_over_a"] > 0
        assert result.stats["records"]["mirrored"] > 0
        assert result.stats["subjects"] == {"total": 4, "train": 3, "test": 1}
        # every record landed in its subject's bucket
        bucket_of = {a.subject_doc_id: a.bucket for a in result.assignments}
        for record in result.records:
            assert record.bucket is bucket_of[record.query_doc_id]
        # mirrored-negative law over the whole dataset
        for record in result.records:
            if record.origin is PairOrigin.MIRRORED_A_OVER_RANDOM_X:
                assert record.negative_ref.doc_id != record.query_doc_id
                assert record.positive_text != record.negative_text
        paths = write_dataset(result, tmp_path / "out")
        loaded = read_records_jsonl(paths["records"])
        assert loaded == result.records
        stats = json.loads(paths["stats"].read_text())
        assert stats["category_diagnostics"]["ep_share"]["A"] == 1.0
        assert stats["category_diagnostics"]["ep_share"]["X"] == 0.0
        assert "short_citation_share" in stats["category_diagnostics"]

    def test_byte_identical_across_runs(self, tmp_path):
        citations, corpus = _pipeline_fixture()
        config = ChunkerConfig(max_seq_length=64)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        write_dataset(build_dataset(citations, corpus, config, 0.8, 7), out_a)
        write_dataset(build_dataset(citations, corpus, config, 0.8, 7), out_b)
        for name in ("records.jsonl", "stats.json", "discards.jsonl"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_missing_documents_are_counted_not_fatal(self):
        citations, corpus = _pipeline_fixture()
        citations.append(
            CitationRecord("USnope", 1, Category.X, "US900", [PassageRef(PassageKind.ABSTRACT)])
        )
        citations.append(
            CitationRecord("US100", 1, Category.X, "USgone", [PassageRef(PassageKind.ABSTRACT)])
        )
        result = build_dataset(citations, corpus, ChunkerConfig(max_seq_length=64), 0.8, 0)
        assert result.stats["counters"]["missing_subject_doc"] == 1
        assert result.stats["counters"]["missing_cited_doc"] == 1
