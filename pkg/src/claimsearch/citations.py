"""Search-report citation parsing and passage resolution.

Examiner citations point into prior-art documents through a free-text
passage field ("abstract; figure 1; paragraph [0002] - paragraph [0023];
claims 1-13").  Only abstract, claim and paragraph references are kept;
figures, page/line pointers and anything the grammar does not recognize
go to a discard channel with the raw text preserved, so nothing is lost
silently.  Standardized references can then be resolved against a parsed
document to recover the cited text in citation order.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from .corpus import PatentDocument, SectionName
from .errors import ClaimSearchError

logger = logging.getLogger(__name__)


class DocMismatch(ClaimSearchError):
    """Resolution attempted against a document with a different id."""


class EmptyResolution(ClaimSearchError):
    """No cited passage could be resolved from the document."""


class Category(str, Enum):
    X = "X"
    A = "A"


class PassageKind(str, Enum):
    ABSTRACT = "Abstract"
    CLAIM_RANGE = "ClaimRange"
    PARAGRAPH_RANGE = "ParagraphRange"


@dataclass(frozen=True)
class PassageRef:
    kind: PassageKind
    start: int | None = None
    end: int | None = None

    def __post_init__(self) -> None:
        if self.kind is PassageKind.ABSTRACT:
            if self.start is not None or self.end is not None:
                raise ValueError("abstract references carry no numbers")
        else:
            if self.start is None or self.end is None:
                raise ValueError(f"{self.kind.value} requires start and end")
            if self.start < 1 or self.end < self.start:
                raise ValueError(f"invalid range {self.start}-{self.end}")


def render_passage_ref(ref: PassageRef) -> str:
    """Canonical text form; re-parsing it yields an equal PassageRef."""
    if ref.kind is PassageKind.ABSTRACT:
        return "abstract"
    if ref.kind is PassageKind.CLAIM_RANGE:
        if ref.start == ref.end:
            return f"claim {ref.start}"
        return f"claims {ref.start}-{ref.end}"
    if ref.start == ref.end:
        return f"paragraph [{ref.start:04d}]"
    return f"paragraph [{ref.start:04d}] - paragraph [{ref.end:04d}]"


# ---------------------------------------------------------------------------
# Passage-field grammar
# ---------------------------------------------------------------------------

_NUM = r"(?:\[\s*0*(?:\d{1,6})\s*\]|0*\d{1,6})"
_DASH = r"(?:-|–|—|to)"
_P_KW = r"(?:paragraphs?|paras?\.?|par\.?|¶)"
_C_KW = r"(?:claims?)"

_ABSTRACT_RE = re.compile(r"^(?:the\s+)?abstract$", re.IGNORECASE)
# "claims 1-13", "claim 1", "claims 1, 3, 5-7"
_CLAIMS_RE = re.compile(
    rf"^{_C_KW}\s*({_NUM}(?:\s*{_DASH}\s*{_NUM})?(?:\s*,\s*{_NUM}(?:\s*{_DASH}\s*{_NUM})?)*)$",
    re.IGNORECASE,
)
# "paragraphs 2-23", "paragraph [0002]", "paragraphs 2, 5"
_PARAS_RE = re.compile(
    rf"^{_P_KW}\s*({_NUM}(?:\s*{_DASH}\s*{_NUM})?(?:\s*,\s*{_NUM}(?:\s*{_DASH}\s*{_NUM})?)*)$",
    re.IGNORECASE,
)
# "paragraph [0002] - paragraph [0023]"
_PARA_PAIR_RE = re.compile(
    rf"^{_P_KW}\s*({_NUM})\s*{_DASH}\s*{_P_KW}\s*({_NUM})$",
    re.IGNORECASE,
)
_NUM_ONLY_RE = re.compile(r"\d+")
_ITEM_SPLIT_RE = re.compile(r"\s*,\s*")
_RANGE_SPLIT_RE = re.compile(rf"\s*{_DASH}\s*", re.IGNORECASE)


def _parse_number(token: str) -> int:
    m = _NUM_ONLY_RE.search(token)
    if m is None:
        raise ValueError(f"no number in {token!r}")
    return int(m.group(0))


def _parse_items(list_text: str, kind: PassageKind) -> list[PassageRef]:
    refs: list[PassageRef] = []
    for item in _ITEM_SPLIT_RE.split(list_text.strip()):
        bounds = _RANGE_SPLIT_RE.split(item)
        if len(bounds) == 1:
            start = end = _parse_number(bounds[0])
        elif len(bounds) == 2:
            start, end = _parse_number(bounds[0]), _parse_number(bounds[1])
        else:
            raise ValueError(f"unparseable range {item!r}")
        refs.append(PassageRef(kind=kind, start=start, end=end))
    return refs


def parse_passage_field(raw: str) -> tuple[list[PassageRef], list[str]]:
    """Classify every ";"-separated segment of an examiner passage field.

    Returns (kept, discarded).  The function is total: every non-empty
    segment lands in exactly one of the two lists, and unrecognized input
    is never fatal.
    """
    kept: list[PassageRef] = []
    discarded: list[str] = []
    for segment in raw.split(";"):
        segment = segment.strip()
        if not segment:
            continue
        if _ABSTRACT_RE.match(segment):
            kept.append(PassageRef(kind=PassageKind.ABSTRACT))
            continue
        try:
            pair = _PARA_PAIR_RE.match(segment)
            if pair:
                start, end = _parse_number(pair.group(1)), _parse_number(pair.group(2))
                kept.append(
                    PassageRef(kind=PassageKind.PARAGRAPH_RANGE, start=start, end=end)
                )
                continue
            claims_m = _CLAIMS_RE.match(segment)
            if claims_m:
                kept.extend(_parse_items(claims_m.group(1), PassageKind.CLAIM_RANGE))
                continue
            paras_m = _PARAS_RE.match(segment)
            if paras_m:
                kept.extend(_parse_items(paras_m.group(1), PassageKind.PARAGRAPH_RANGE))
                continue
        except ValueError:
            pass
        discarded.append(segment)
    return kept, discarded


# ---------------------------------------------------------------------------
# Citation records
# ---------------------------------------------------------------------------


@dataclass
class CitationRecord:
    subject_doc_id: str
    subject_claim_number: int
    category: Category
    cited_doc_id: str
    passages: list[PassageRef]
    discarded: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "subject_doc_id": self.subject_doc_id,
            "subject_claim_number": self.subject_claim_number,
            "category": self.category.value,
            "cited_doc_id": self.cited_doc_id,
            "passages": [
                {"kind": p.kind.value, "start": p.start, "end": p.end}
                for p in self.passages
            ],
            "discarded": list(self.discarded),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CitationRecord":
        return cls(
            subject_doc_id=data["subject_doc_id"],
            subject_claim_number=data["subject_claim_number"],
            category=Category(data["category"]),
            cited_doc_id=data["cited_doc_id"],
            passages=[
                PassageRef(PassageKind(p["kind"]), p.get("start"), p.get("end"))
                for p in data["passages"]
            ],
            discarded=list(data.get("discarded", [])),
        )


@dataclass
class CitationIngestReport:
    rows_total: int = 0
    kept: int = 0
    dropped_category: dict[str, int] = field(default_factory=dict)
    dropped_no_claim_one: int = 0
    dropped_empty: int = 0
    discarded_passages: int = 0
    discard_entries: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows_total": self.rows_total,
            "kept": self.kept,
            "dropped_category": dict(sorted(self.dropped_category.items())),
            "dropped_no_claim_one": self.dropped_no_claim_one,
            "dropped_empty": self.dropped_empty,
            "discarded_passages": self.discarded_passages,
        }


def _parse_claim_numbers(text: str) -> list[int]:
    """Subject-side claim list: "1", "1-3", "1,4", "claims 1-13"."""
    numbers: set[int] = set()
    cleaned = re.sub(r"(?i)claims?", " ", text)
    for item in _ITEM_SPLIT_RE.split(cleaned.strip()):
        if not item.strip():
            continue
        bounds = _RANGE_SPLIT_RE.split(item.strip())
        try:
            if len(bounds) == 1:
                numbers.add(_parse_number(bounds[0]))
            elif len(bounds) == 2:
                lo, hi = _parse_number(bounds[0]), _parse_number(bounds[1])
                numbers.update(range(lo, hi + 1))
        except ValueError:
            continue
    return sorted(numbers)


def _rows_from_file(path: Path) -> Iterable[dict]:
    if path.suffix.lower() == ".csv":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            yield from csv.DictReader(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)


def load_citations(path: str | Path) -> tuple[list[CitationRecord], CitationIngestReport]:
    """Read a citation table (CSV or JSONL) and standardize it.

    Expected columns: subject_doc_id, claim_numbers, category,
    cited_doc_id, passage_field.  Rows with categories other than X/A,
    or whose subject claim list does not include claim 1, are dropped
    and counted.
    """
    records: list[CitationRecord] = []
    report = CitationIngestReport()
    for row in _rows_from_file(Path(path)):
        report.rows_total += 1
        category_raw = str(row.get("category", "")).strip().upper()
        if category_raw not in (Category.X.value, Category.A.value):
            report.dropped_category[category_raw] = (
                report.dropped_category.get(category_raw, 0) + 1
            )
            continue
        claim_numbers = _parse_claim_numbers(str(row.get("claim_numbers", "")))
        if 1 not in claim_numbers:
            report.dropped_no_claim_one += 1
            continue
        subject = str(row.get("subject_doc_id", "")).strip()
        cited = str(row.get("cited_doc_id", "")).strip()
        if not subject or not cited:
            report.dropped_empty += 1
            continue
        raw_field = str(row.get("passage_field", ""))
        kept, discarded = parse_passage_field(raw_field)
        record = CitationRecord(
            subject_doc_id=subject,
            subject_claim_number=1,
            category=Category(category_raw),
            cited_doc_id=cited,
            passages=kept,
            discarded=discarded,
        )
        records.append(record)
        report.kept += 1
        report.discarded_passages += len(discarded)
        for raw in discarded:
            report.discard_entries.append(
                {
                    "subject_doc_id": subject,
                    "cited_doc_id": cited,
                    "raw": raw,
                    "reason": "unrecognized passage reference",
                }
            )
    return records, report


def write_citations_jsonl(records: Iterable[CitationRecord], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count


def read_citations_jsonl(path: str | Path) -> list[CitationRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(CitationRecord.from_dict(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# Passage resolution
# ---------------------------------------------------------------------------

# Body sections searched for published paragraph numbers, in priority
# order for the (rare) case of per-section numbering restarts.
_BODY_SECTIONS = (
    SectionName.DESCRIPTION,
    SectionName.BACKGROUND,
    SectionName.SUMMARY,
    SectionName.CROSS_REF,
    SectionName.BRIEF_FIG,
)


@dataclass(frozen=True)
class ResolvedPassage:
    doc_id: str
    section: SectionName
    number: int
    text: str


@dataclass(frozen=True)
class SkippedNumber:
    kind: PassageKind
    number: int | None


@dataclass
class PassageResolution:
    passages: list[ResolvedPassage]
    skipped: list[SkippedNumber]


class _BodyLookup:
    """Paragraph-number lookup over the body sections of one document.

    Published paragraph numbering is usually continuous across the whole
    body, in which case a range may legitimately span sections and is
    resolved across all of them.  When numbers repeat across section
    names (numbering restarted per section) a range is resolved only
    inside the first priority section that contains its start.
    """

    def __init__(self, doc: PatentDocument) -> None:
        self.per_name: dict[SectionName, dict[int, ResolvedPassage]] = {}
        seen: set[int] = set()
        self.restarted = False
        for name in _BODY_SECTIONS:
            table: dict[int, ResolvedPassage] = {}
            for paragraph in doc.paragraphs_in(name):
                table[paragraph.number] = ResolvedPassage(
                    doc_id=doc.doc_id,
                    section=name,
                    number=paragraph.number,
                    text=paragraph.text,
                )
            if table:
                if seen & table.keys():
                    self.restarted = True
                seen |= table.keys()
                self.per_name[name] = table

    def get(self, number: int, range_start: int) -> ResolvedPassage | None:
        if self.restarted:
            for name in _BODY_SECTIONS:
                table = self.per_name.get(name)
                if table and range_start in table:
                    return table.get(number)
            return None
        for name in _BODY_SECTIONS:
            passage = self.per_name.get(name, {}).get(number)
            if passage is not None:
                return passage
        return None


def resolve_passages(citation: CitationRecord, doc: PatentDocument) -> PassageResolution:
    """Recover the cited text from `doc`, in citation order.

    Missing paragraph/claim numbers are skipped and reported.  Raises
    DocMismatch when `doc` is not the cited document and EmptyResolution
    when nothing at all could be resolved (the caller decides whether to
    drop the citation).
    """
    if citation.cited_doc_id != doc.doc_id:
        raise DocMismatch(
            f"citation points at {citation.cited_doc_id}, document is {doc.doc_id}"
        )
    passages: list[ResolvedPassage] = []
    skipped: list[SkippedNumber] = []
    body = _BodyLookup(doc)
    for ref in citation.passages:
        if ref.kind is PassageKind.ABSTRACT:
            abstract = doc.paragraphs_in(SectionName.ABSTRACT)
            if not abstract:
                skipped.append(SkippedNumber(PassageKind.ABSTRACT, None))
                continue
            for paragraph in abstract:
                passages.append(
                    ResolvedPassage(
                        doc_id=doc.doc_id,
                        section=SectionName.ABSTRACT,
                        number=paragraph.number,
                        text=paragraph.text,
                    )
                )
        elif ref.kind is PassageKind.CLAIM_RANGE:
            assert ref.start is not None and ref.end is not None
            for number in range(ref.start, ref.end + 1):
                claim = doc.claim(number)
                if claim is None:
                    skipped.append(SkippedNumber(PassageKind.CLAIM_RANGE, number))
                    continue
                passages.append(
                    ResolvedPassage(
                        doc_id=doc.doc_id,
                        section=SectionName.CLAIMS,
                        number=number,
                        text=claim.full_text,
                    )
                )
        else:
            assert ref.start is not None and ref.end is not None
            for number in range(ref.start, ref.end + 1):
                passage = body.get(number, range_start=ref.start)
                if passage is None:
                    skipped.append(SkippedNumber(PassageKind.PARAGRAPH_RANGE, number))
                    continue
                passages.append(passage)
    if not passages:
        raise EmptyResolution(
            f"no passage of {citation.cited_doc_id} resolved for "
            f"{citation.subject_doc_id}"
        )
    return PassageResolution(passages=passages, skipped=skipped)
