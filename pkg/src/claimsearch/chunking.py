"""Token-bounded chunking of passages at paragraph boundaries.

Chunks are built greedily: start at a paragraph boundary, append whole
paragraphs while the joined text stays within the token budget, then
start the next chunk.  A chunk never crosses a section boundary (and
never mixes documents).  A single paragraph that exceeds the budget on
its own is split at sentence boundaries, and as a last resort hard-split
at the token limit; such pieces carry a non-zero `part` index so their
identity stays unique.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .citations import ResolvedPassage
from .corpus import PatentDocument, SectionName
from .errors import ConfigError
from .tokenizer import get_token_counter

_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class ChunkerConfig:
    max_seq_length: int = 512
    token_counter: str = "reference"

    def __post_init__(self) -> None:
        if self.max_seq_length < 16:
            raise ConfigError(f"max_seq_length must be >= 16, got {self.max_seq_length}")
        get_token_counter(self.token_counter)  # fail fast on unknown counters

    def counter(self):
        return get_token_counter(self.token_counter)


@dataclass(frozen=True, order=True)
class ChunkRef:
    doc_id: str
    section: SectionName
    paragraph_numbers: tuple[int, ...]
    part: int = 0

    def key(self) -> str:
        numbers = ",".join(str(n) for n in self.paragraph_numbers)
        base = f"{self.doc_id}|{self.section.value}|{numbers}"
        return base if self.part == 0 else f"{base}|p{self.part}"

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "section": self.section.value,
            "paragraph_numbers": list(self.paragraph_numbers),
            "part": self.part,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChunkRef":
        return cls(
            doc_id=data["doc_id"],
            section=SectionName(data["section"]),
            paragraph_numbers=tuple(data["paragraph_numbers"]),
            part=data.get("part", 0),
        )


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    section: SectionName
    paragraph_numbers: tuple[int, ...]
    text: str
    token_count: int
    part: int = 0

    @property
    def ref(self) -> ChunkRef:
        return ChunkRef(self.doc_id, self.section, self.paragraph_numbers, self.part)


def _split_oversized(
    passage: ResolvedPassage, max_tokens: int, counter
) -> list[Chunk]:
    """Sentence-greedy split of one over-budget paragraph.

    Any single sentence still over the budget is hard-split at token
    boundaries.  Pieces are numbered part=1..k.
    """
    pieces: list[str] = []
    current = ""
    for sentence in _SENTENCE_SPLIT_RE.split(passage.text):
        if not sentence:
            continue
        candidate = sentence if not current else current + " " + sentence
        if counter.count(candidate) <= max_tokens:
            current = candidate
            continue
        if current:
            pieces.append(current)
            current = ""
        if counter.count(sentence) <= max_tokens:
            current = sentence
        else:
            spans = counter.spans(sentence)
            for i in range(0, len(spans), max_tokens):
                window = spans[i : i + max_tokens]
                pieces.append(sentence[window[0][0] : window[-1][1]])
    if current:
        pieces.append(current)
    return [
        Chunk(
            doc_id=passage.doc_id,
            section=passage.section,
            paragraph_numbers=(passage.number,),
            text=piece,
            token_count=counter.count(piece),
            part=i + 1,
        )
        for i, piece in enumerate(pieces)
    ]


def chunk_passages(
    passages: Sequence[ResolvedPassage], config: ChunkerConfig
) -> list[Chunk]:
    """Greedy packing of whole paragraphs into token-bounded chunks.

    Consecutive passages from the same (document, section) pack
    together; a change of document or section always starts a new chunk.
    An empty input yields an empty list.
    """
    counter = config.counter()
    max_tokens = config.max_seq_length
    chunks: list[Chunk] = []

    group_key: tuple[str, SectionName] | None = None
    current_text = ""
    current_numbers: list[int] = []

    def flush() -> None:
        nonlocal current_text, current_numbers
        if current_text:
            doc_id, section = group_key  # type: ignore[misc]
            chunks.append(
                Chunk(
                    doc_id=doc_id,
                    section=section,
                    paragraph_numbers=tuple(current_numbers),
                    text=current_text,
                    token_count=counter.count(current_text),
                )
            )
        current_text = ""
        current_numbers = []

    for passage in passages:
        if not passage.text:
            continue
        key = (passage.doc_id, passage.section)
        if key != group_key:
            flush()
            group_key = key
        candidate = (
            passage.text if not current_text else current_text + " " + passage.text
        )
        if counter.count(candidate) <= max_tokens:
            current_text = candidate
            current_numbers.append(passage.number)
            continue
        flush()
        if counter.count(passage.text) <= max_tokens:
            current_text = passage.text
            current_numbers = [passage.number]
        else:
            chunks.extend(_split_oversized(passage, max_tokens, counter))
    flush()
    return chunks


def document_passages(doc: PatentDocument) -> list[ResolvedPassage]:
    """Every paragraph of every section as a passage stream."""
    return [
        ResolvedPassage(
            doc_id=doc.doc_id, section=section.name, number=p.number, text=p.text
        )
        for section in doc.sections
        for p in section.paragraphs
    ]


def chunk_document(doc: PatentDocument, config: ChunkerConfig) -> list[Chunk]:
    """Chunk a whole document; each section is chunked independently."""
    return chunk_passages(document_passages(doc), config)


def chunk_documents(
    docs: Iterable[PatentDocument], config: ChunkerConfig
) -> list[Chunk]:
    out: list[Chunk] = []
    for doc in docs:
        out.extend(chunk_document(doc, config))
    return out
