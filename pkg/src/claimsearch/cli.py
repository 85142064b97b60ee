"""Command-line pipeline: ingest, citations, dataset, embed, index, eval, serve."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .chunking import ChunkerConfig, chunk_document
from .citations import load_citations, read_citations_jsonl, write_citations_jsonl
from .corpus import (
    CorpusStore,
    Jurisdiction,
    iter_application_xml,
    parse_application,
    write_corpus_jsonl,
)
from .dataset import build_dataset, split_by_subject, write_dataset
from .embed import VectorCache, make_embedder, text_hash
from .errors import ClaimSearchError
from .evalharness import (
    NegativeKind,
    build_eval_records,
    make_max_chunk_scorer,
    make_weighted_element_scorer,
    pairwise_accuracy,
    read_eval_records_jsonl,
    write_eval_records_jsonl,
)
from .index import AnnParams, VectorIndex, aggregate_documents, build_index, rerank_top_n
from .scoring import ClaimQuery, query_text_for_elements
from .service import (
    detect_claim_elements,
    engine_from_config,
    load_service_config,
    make_server,
)

logger = logging.getLogger(__name__)


def _load_citation_records(path: str):
    if path.endswith(".jsonl") and _is_standardized_jsonl(path):
        return read_citations_jsonl(path), None
    records, report = load_citations(path)
    return records, report


def _is_standardized_jsonl(path: str) -> bool:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                return "passages" in json.loads(line)
    return False


def cmd_ingest(args: argparse.Namespace) -> int:
    jurisdiction = None if args.jurisdiction == "auto" else Jurisdiction(args.jurisdiction)
    documents = (
        parse_application(xml, jurisdiction) for xml in iter_application_xml(args.input)
    )
    count = write_corpus_jsonl(documents, args.out)
    print(f"ingested {count} documents -> {args.out}")
    return 0


def cmd_parse_citations(args: argparse.Namespace) -> int:
    records, report = load_citations(args.input)
    write_citations_jsonl(records, args.out)
    if args.discards:
        with open(args.discards, "w", encoding="utf-8") as fh:
            for entry in report.discard_entries:
                fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False))
                fh.write("\n")
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def cmd_build_dataset(args: argparse.Namespace) -> int:
    citations, _ = _load_citation_records(args.citations)
    corpus = CorpusStore.from_jsonl(args.corpus)
    config = ChunkerConfig(max_seq_length=args.max_seq_len)
    result = build_dataset(
        citations, corpus, config, train_fraction=args.train_frac, rng_seed=args.seed
    )
    paths = write_dataset(result, args.out)
    print(
        f"wrote {len(result.records)} records "
        f"({result.stats['records']['x_over_a']} X-over-A, "
        f"{result.stats['records']['mirrored']} mirrored) -> {paths['records']}"
    )
    return 0


def cmd_embed(args: argparse.Namespace) -> int:
    embedder = make_embedder(args.provider, dim=args.dim, endpoint=args.endpoint)
    texts: list[tuple[str, str]] = []
    with open(args.texts, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            texts.append((str(entry.get("id", text_hash(entry["text"]))), entry["text"]))
    cache = VectorCache()
    vectors = embedder.embed_batch([t for _, t in texts])
    with open(args.out, "w", encoding="utf-8") as fh:
        for (entry_id, text), vector in zip(texts, vectors):
            cache.put(text, embedder.provider_id, vector)
            fh.write(
                json.dumps(
                    {
                        "id": entry_id,
                        "text_hash": text_hash(text),
                        "provider_id": embedder.provider_id,
                        "vector": [float(x) for x in vector],
                    },
                    sort_keys=True,
                )
            )
            fh.write("\n")
    print(f"embedded {len(texts)} texts -> {args.out}")
    return 0


def cmd_index_build(args: argparse.Namespace) -> int:
    corpus = CorpusStore.from_jsonl(args.corpus)
    config = ChunkerConfig(max_seq_length=args.max_seq_len)
    embedder = make_embedder(args.provider, dim=args.dim, endpoint=args.endpoint)
    entries = []
    for doc in corpus:
        chunks = chunk_document(doc, config)
        if not chunks:
            continue
        vectors = embedder.embed_batch([c.text for c in chunks])
        entries.extend(zip(chunks, vectors))
    params = AnnParams(mode=args.mode, seed=args.seed)
    index = build_index(entries, embedder.provider_id, params)
    index.save(args.out)
    print(f"indexed {len(index)} chunks from {len(corpus)} documents -> {args.out}")
    return 0


def cmd_index_query(args: argparse.Namespace) -> int:
    index = VectorIndex.load(args.index)
    corpus = CorpusStore.from_jsonl(args.corpus) if args.corpus else CorpusStore()
    provider_name = index.provider_id.split(":", 1)[0]
    embedder = make_embedder(provider_name, dim=index.dim, endpoint=args.endpoint)
    claim_text = Path(args.claim_file).read_text(encoding="utf-8")
    elements = detect_claim_elements(claim_text)
    config = ChunkerConfig(max_seq_length=args.max_seq_len)
    query_text, truncated = query_text_for_elements(elements, config.max_seq_length)
    hits = index.query(embedder.embed_text(query_text), args.k)
    docs = aggregate_documents(hits)
    query_id = text_hash(query_text)[:12]
    if args.rerank_n > 0 and len(corpus):
        from .corpus import ClaimElement

        query = ClaimQuery(
            claim_text=claim_text.strip(),
            elements=tuple(ClaimElement(t, 0) for t in elements),
            query_text=query_text,
            token_budget=config.max_seq_length,
            truncated=truncated,
        )
        reranked = rerank_top_n(query, docs[: args.rerank_n], corpus, embedder)
        docs = reranked + docs[args.rerank_n :]
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for doc in docs:
            method = "weighted_element" if doc.rerank_score is not None else "max_chunk"
            entry = {
                "query_id": query_id,
                "doc_id": doc.doc_id,
                "method": method,
                "score": doc.rerank_score if doc.rerank_score is not None else doc.score,
            }
            if doc.best_chunk is not None:
                entry["best_chunk"] = doc.best_chunk.ref.to_dict()
            if doc.per_element_best is not None:
                entry["per_element_best"] = doc.per_element_best
            out.write(json.dumps(entry, sort_keys=True, ensure_ascii=False))
            out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_build_eval_records(args: argparse.Namespace) -> int:
    citations, _ = _load_citation_records(args.citations)
    corpus = CorpusStore.from_jsonl(args.corpus)
    subjects = {c.subject_doc_id for c in citations}
    assignments = split_by_subject(subjects, args.train_frac, args.seed)
    config = ChunkerConfig(max_seq_length=args.max_seq_len)
    records, counters = build_eval_records(
        citations,
        corpus,
        assignments,
        config,
        negative=NegativeKind(args.negative),
        rng_seed=args.seed,
    )
    write_eval_records_jsonl(records, args.out)
    print(json.dumps(counters, sort_keys=True))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    records = read_eval_records_jsonl(args.records)
    records = [r for r in records if r.negative_kind is NegativeKind(args.negative)]
    if not records:
        raise ClaimSearchError(
            f"no records with negative kind {args.negative!r} in {args.records}"
        )
    embedder = make_embedder(args.provider, dim=args.dim, endpoint=args.endpoint)
    if args.method == "max_chunk":
        scorer = make_max_chunk_scorer(embedder, token_budget=args.max_seq_len)
    else:
        scorer = make_weighted_element_scorer(embedder)
    report = pairwise_accuracy(records, scorer, method=args.method)
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    print(report.render_table())
    return 0


def cmd_serve(args: argparse.Namespace, block: bool = True):
    config = load_service_config(args.config)
    if args.index:
        config.index_dir = args.index
    if args.corpus:
        config.corpus_path = args.corpus
    if args.port is not None:
        config.port = args.port
    if args.host:
        config.host = args.host
    if args.provider:
        config.provider = args.provider
    if args.dim:
        config.dim = args.dim
    engine = engine_from_config(config)
    server = make_server(engine, config.host, config.port)
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}")
    if not block:
        return server
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claimsearch",
        description="Patent claim search pipeline: parse, build datasets, index, evaluate, serve.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse application XML into corpus JSONL")
    p.add_argument("--input", required=True, help="XML file, bulk file, or directory")
    p.add_argument("--jurisdiction", default="auto", choices=["auto", "EP", "US", "OTHER"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("parse-citations", help="standardize a citation table")
    p.add_argument("--input", required=True, help="CSV or JSONL citation table")
    p.add_argument("--out", required=True)
    p.add_argument("--discards", default=None, help="discard report JSONL")
    p.set_defaults(func=cmd_parse_citations)

    p = sub.add_parser("build-dataset", help="build contrastive pair records")
    p.add_argument("--citations", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--max-seq-len", type=int, default=512)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("embed", help="embed texts from JSONL {id, text}")
    p.add_argument("--texts", required=True)
    p.add_argument("--provider", default="reference", choices=["reference", "remote"])
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p_index = sub.add_parser("index", help="build or query a vector index")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)

    p = index_sub.add_parser("build", help="chunk, embed and index a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--provider", default="reference", choices=["reference", "remote"])
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--mode", default="exact", choices=["exact", "hnsw"])
    p.add_argument("--max-seq-len", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index_build)

    p = index_sub.add_parser("query", help="search an index with a claim file")
    p.add_argument("--index", required=True)
    p.add_argument("--claim-file", required=True)
    p.add_argument("--corpus", default=None, help="corpus JSONL (needed for re-ranking)")
    p.add_argument("--k", type=int, default=5000)
    p.add_argument("--rerank-n", type=int, default=50)
    p.add_argument("--max-seq-len", type=int, default=512)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_index_query)

    p = sub.add_parser("build-eval-records", help="enumerate pairwise eval records")
    p.add_argument("--citations", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negative", default="a", choices=["a", "random"])
    p.add_argument("--max-seq-len", type=int, default=512)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_eval_records)

    p = sub.add_parser("eval", help="pairwise ranking accuracy over eval records")
    p.add_argument("--records", required=True)
    p.add_argument("--method", default="max_chunk", choices=["max_chunk", "weighted_element"])
    p.add_argument("--negative", default="a", choices=["a", "random"])
    p.add_argument("--provider", default="reference", choices=["reference", "remote"])
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--max-seq-len", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP search service")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--index", default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--provider", default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ClaimSearchError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    except FileNotFoundError as exc:
        print(
            json.dumps({"error": "FileNotFound", "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
