"""Patent full-text XML parsing into a normalized document model.

Input is one published application per XML document (post-2001 US and EP
full-text formats, where claims are delimited by nested <claim-text>
tags).  The parser produces:

  1. Body sections, segmented by the headings found inside <description>
     and mapped onto a fixed section vocabulary via an alias table.
  2. Paragraphs with their published bracket numbers ("[0002]") or `num`
     attributes; unnumbered paragraphs are numbered sequentially.
  3. Claims as ordered element lists, flattened depth-first from the
     nested <claim-text> structure.  The claims are additionally exposed
     as one "Claims" section whose paragraphs are the individual claims
     numbered by claim number, so passage resolution and chunking can
     treat cited claims like any other cited text.

Parsing is pure: identical bytes yield structurally identical documents,
and parsed documents are never mutated afterwards.
"""

from __future__ import annotations

import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ClaimSearchError

logger = logging.getLogger(__name__)


class MalformedXml(ClaimSearchError):
    """Input is not well-formed XML."""


class MissingDocId(ClaimSearchError):
    """No publication identifier could be found in the document."""


class Jurisdiction(str, Enum):
    EP = "EP"
    US = "US"
    OTHER = "OTHER"


class SectionName(str, Enum):
    ABSTRACT = "Abstract"
    CROSS_REF = "CrossRef"
    BACKGROUND = "Background"
    SUMMARY = "Summary"
    BRIEF_FIG = "BriefFig"
    DESCRIPTION = "Description"
    CLAIMS = "Claims"
    ADMIN = "Admin"
    UNKNOWN = "Unknown"


# Heading prefixes (normalized to uppercase alphanumerics) mapped onto the
# section vocabulary.  Checked in order; first prefix match wins; headings
# that match nothing map to UNKNOWN.
DEFAULT_SECTION_ALIASES: tuple[tuple[str, SectionName], ...] = (
    ("CROSS REFERENCE", SectionName.CROSS_REF),
    ("CROSSREFERENCE", SectionName.CROSS_REF),
    ("RELATED APPLICATION", SectionName.CROSS_REF),
    ("BACKGROUND", SectionName.BACKGROUND),
    ("FIELD OF THE INVENTION", SectionName.BACKGROUND),
    ("TECHNICAL FIELD", SectionName.BACKGROUND),
    ("SUMMARY", SectionName.SUMMARY),
    ("BRIEF SUMMARY", SectionName.SUMMARY),
    ("BRIEF DESCRIPTION OF THE DRAWING", SectionName.BRIEF_FIG),
    ("BRIEF DESCRIPTION OF THE FIGURE", SectionName.BRIEF_FIG),
    ("BRIEF DESCRIPTION OF DRAWING", SectionName.BRIEF_FIG),
    ("DESCRIPTION OF THE DRAWING", SectionName.BRIEF_FIG),
    ("DETAILED DESCRIPTION", SectionName.DESCRIPTION),
    ("DESCRIPTION OF EMBODIMENT", SectionName.DESCRIPTION),
    ("DESCRIPTION OF THE PREFERRED EMBODIMENT", SectionName.DESCRIPTION),
    ("DESCRIPTION", SectionName.DESCRIPTION),
    ("ABSTRACT", SectionName.ABSTRACT),
    ("CLAIMS", SectionName.CLAIMS),
    ("ADMINISTRATIVE", SectionName.ADMIN),
)

_WS_RE = re.compile(r"\s+")
_PARA_MARKER_RE = re.compile(r"^\s*\[\s*(\d{1,6})\s*\]\s*")
_TRAILING_INT_RE = re.compile(r"(\d+)\s*$")


def normalize_text(text: str) -> str:
    """Collapse whitespace runs to single spaces and strip the ends."""
    return _WS_RE.sub(" ", text).strip()


def normalize_heading(text: str) -> str:
    return _WS_RE.sub(" ", re.sub(r"[^A-Za-z0-9]+", " ", text)).strip().upper()


@dataclass(frozen=True)
class Paragraph:
    number: int
    text: str


@dataclass
class Section:
    name: SectionName
    paragraphs: list[Paragraph] = field(default_factory=list)


@dataclass(frozen=True)
class ClaimElement:
    text: str
    depth: int


@dataclass
class Claim:
    number: int
    elements: list[ClaimElement]
    full_text: str


@dataclass
class PatentDocument:
    doc_id: str
    jurisdiction: Jurisdiction
    sections: list[Section]
    claims: list[Claim]

    def claim(self, number: int) -> Claim | None:
        for c in self.claims:
            if c.number == number:
                return c
        return None

    def sections_named(self, name: SectionName) -> list[Section]:
        return [s for s in self.sections if s.name == name]

    def paragraphs_in(self, name: SectionName) -> list[Paragraph]:
        out: list[Paragraph] = []
        for s in self.sections_named(name):
            out.extend(s.paragraphs)
        return out


def flatten_claim_elements(claim: Claim) -> list[ClaimElement]:
    """The claim's elements in document order (flattened at parse time)."""
    return list(claim.elements)


# ---------------------------------------------------------------------------
# XML parsing
# ---------------------------------------------------------------------------


def _local(tag: object) -> str:
    if not isinstance(tag, str):
        return ""
    return tag.rsplit("}", 1)[-1].lower()


def _itertext(el: ET.Element) -> str:
    return "".join(el.itertext())


def _find_local(el: ET.Element, name: str) -> ET.Element | None:
    for child in el.iter():
        if _local(child.tag) == name:
            return child
    return None


def _extract_doc_id(root: ET.Element) -> str:
    ucid = root.get("ucid") or root.get("doc-id")
    if ucid:
        return ucid.replace("-", "").strip()
    pub = _find_local(root, "publication-reference")
    if pub is not None:
        doc_id_el = _find_local(pub, "document-id")
        if doc_id_el is not None:
            parts = {"country": "", "doc-number": "", "kind": ""}
            for child in doc_id_el:
                name = _local(child.tag)
                if name in parts:
                    parts[name] = normalize_text(child.text or "")
            assembled = parts["country"] + parts["doc-number"] + parts["kind"]
            if parts["doc-number"]:
                return assembled
    raise MissingDocId("no publication identifier found in document")


def _infer_jurisdiction(doc_id: str) -> Jurisdiction:
    if doc_id.startswith("EP"):
        return Jurisdiction.EP
    if doc_id.startswith("US"):
        return Jurisdiction.US
    return Jurisdiction.OTHER


def _map_heading(heading: str, aliases: tuple[tuple[str, SectionName], ...]) -> SectionName:
    normalized = normalize_heading(heading)
    for prefix, name in aliases:
        if normalized.startswith(prefix):
            return name
    return SectionName.UNKNOWN


class _SectionBuilder:
    """Accumulates paragraph runs; each heading starts a new section run."""

    def __init__(self) -> None:
        self.sections: list[Section] = []
        self._current: Section | None = None
        self._pending_name = SectionName.DESCRIPTION
        self._prev_number = 0

    def start(self, name: SectionName) -> None:
        self._current = None  # lazily created on first paragraph
        self._pending_name = name
        self._prev_number = 0

    def add_paragraph(self, explicit_number: int | None, text: str) -> None:
        text = normalize_text(text)
        if not text:
            return
        if self._current is None:
            self._current = Section(self._pending_name)
            self.sections.append(self._current)
        number = explicit_number if explicit_number is not None else self._prev_number + 1
        if number <= self._prev_number:
            # published numbering must increase within a run; treat the
            # marker as unreliable and renumber
            logger.debug("non-increasing paragraph number %s; renumbering", number)
            number = self._prev_number + 1
        self._prev_number = number
        self._current.paragraphs.append(Paragraph(number=number, text=text))


def _paragraph_number_and_text(el: ET.Element) -> tuple[int | None, str]:
    text = _itertext(el)
    marker_number = None
    m = _PARA_MARKER_RE.match(text)
    if m:
        marker_number = int(m.group(1))
        text = text[m.end():]
    num_attr = el.get("num") or el.get("number")
    if num_attr:
        digits = re.sub(r"\D", "", num_attr)
        if digits:
            return int(digits), text
    return marker_number, text


def _claim_number(el: ET.Element, fallback: int) -> int:
    for attr in ("num", "number", "id"):
        value = el.get(attr)
        if value:
            m = _TRAILING_INT_RE.search(value)
            if m:
                return int(m.group(1))
    return fallback


def _flatten_claim_xml(el: ET.Element, depth: int, out: list[ClaimElement]) -> None:
    """Depth-first flattening of nested <claim-text> tags.

    The text a tag carries before its first nested <claim-text> becomes
    that tag's own element.  Text of non-claim-text children (claim
    references and similar inline markup) stays in the surrounding flow.
    Text trailing a nested tag is folded into the most recently emitted
    element so the round-trip to full_text loses nothing.
    """
    lead_done = False
    pending = el.text or ""

    def emit(buf: str, own_element: bool) -> None:
        text = normalize_text(buf)
        if not text:
            return
        if own_element or not out:
            out.append(ClaimElement(text=text, depth=depth))
        else:
            last = out[-1]
            out[-1] = ClaimElement(text=last.text + " " + text, depth=last.depth)

    for child in el:
        if _local(child.tag) == "claim-text":
            emit(pending, own_element=not lead_done)
            lead_done = True
            pending = ""
            _flatten_claim_xml(child, depth + 1, out)
            pending = child.tail or ""
        else:
            pending += _itertext(child) + (child.tail or "")
    emit(pending, own_element=not lead_done)


def _parse_claims(claims_el: ET.Element) -> list[Claim]:
    claims: list[Claim] = []
    for i, claim_el in enumerate(c for c in claims_el if _local(c.tag) == "claim"):
        number = _claim_number(claim_el, fallback=i + 1)
        elements: list[ClaimElement] = []
        nested = [c for c in claim_el if _local(c.tag) == "claim-text"]
        if nested:
            for child in nested:
                _flatten_claim_xml(child, 0, elements)
        else:
            text = normalize_text(_itertext(claim_el))
            if text:
                elements.append(ClaimElement(text=text, depth=0))
        if not elements:
            logger.debug("claim %s has no text; dropped", number)
            continue
        full_text = normalize_text(" ".join(e.text for e in elements))
        claims.append(Claim(number=number, elements=elements, full_text=full_text))
    return claims


def parse_application(
    xml_data: bytes | str,
    jurisdiction: Jurisdiction | None = None,
    aliases: tuple[tuple[str, SectionName], ...] = DEFAULT_SECTION_ALIASES,
) -> PatentDocument:
    """Parse one published application into the normalized model.

    Raises MalformedXml for unparseable input and MissingDocId when no
    publication identifier is present.
    """
    try:
        root = ET.fromstring(xml_data)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc

    doc_id = _extract_doc_id(root)
    if jurisdiction is None:
        jurisdiction = _infer_jurisdiction(doc_id)

    builder = _SectionBuilder()

    abstract_el = _find_local(root, "abstract")
    if abstract_el is not None:
        builder.start(SectionName.ABSTRACT)
        paragraphs = [p for p in abstract_el.iter() if _local(p.tag) == "p"]
        if paragraphs:
            for p in paragraphs:
                number, text = _paragraph_number_and_text(p)
                builder.add_paragraph(number, text)
        else:
            builder.add_paragraph(None, _itertext(abstract_el))

    description_el = _find_local(root, "description")
    if description_el is not None:
        builder.start(SectionName.DESCRIPTION)
        for child in description_el:
            name = _local(child.tag)
            if name == "heading":
                builder.start(_map_heading(_itertext(child), aliases))
            elif name == "p":
                number, text = _paragraph_number_and_text(child)
                builder.add_paragraph(number, text)

    claims_el = _find_local(root, "claims")
    claims = _parse_claims(claims_el) if claims_el is not None else []
    if claims:
        builder.start(SectionName.CLAIMS)
        for claim in claims:
            builder.add_paragraph(claim.number, claim.full_text)

    return PatentDocument(
        doc_id=doc_id,
        jurisdiction=jurisdiction,
        sections=builder.sections,
        claims=claims,
    )


# ---------------------------------------------------------------------------
# Bulk input and JSONL persistence
# ---------------------------------------------------------------------------

_XML_DECL_RE = re.compile(rb"<\?xml[^>]*\?>")


def iter_application_xml(path: str | Path) -> Iterator[bytes]:
    """Yield one XML document per entry.

    `path` may be a directory of per-document files (sorted by name), a
    single-document file, or a concatenated bulk file with one XML
    declaration per entry.
    """
    path = Path(path)
    if path.is_dir():
        for child in sorted(path.glob("*.xml")):
            yield child.read_bytes()
        return
    data = path.read_bytes()
    starts = [m.start() for m in _XML_DECL_RE.finditer(data)]
    if len(starts) <= 1:
        yield data
        return
    for begin, end in zip(starts, starts[1:] + [len(data)]):
        entry = data[begin:end].strip()
        if entry:
            yield entry


def document_to_dict(doc: PatentDocument) -> dict:
    return {
        "doc_id": doc.doc_id,
        "jurisdiction": doc.jurisdiction.value,
        "sections": [
            {
                "name": section.name.value,
                "paragraphs": [
                    {"number": p.number, "text": p.text} for p in section.paragraphs
                ],
            }
            for section in doc.sections
        ],
        "claims": [
            {
                "number": claim.number,
                "full_text": claim.full_text,
                "elements": [{"text": e.text, "depth": e.depth} for e in claim.elements],
            }
            for claim in doc.claims
        ],
    }


def document_from_dict(data: dict) -> PatentDocument:
    return PatentDocument(
        doc_id=data["doc_id"],
        jurisdiction=Jurisdiction(data["jurisdiction"]),
        sections=[
            Section(
                name=SectionName(s["name"]),
                paragraphs=[Paragraph(p["number"], p["text"]) for p in s["paragraphs"]],
            )
            for s in data["sections"]
        ],
        claims=[
            Claim(
                number=c["number"],
                elements=[ClaimElement(e["text"], e["depth"]) for e in c["elements"]],
                full_text=c["full_text"],
            )
            for c in data["claims"]
        ],
    )


def write_corpus_jsonl(documents: Iterable[PatentDocument], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            fh.write(json.dumps(document_to_dict(doc), sort_keys=True, ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count


def read_corpus_jsonl(path: str | Path) -> Iterator[PatentDocument]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield document_from_dict(json.loads(line))


class CorpusStore:
    """In-memory corpus keyed by doc_id."""

    def __init__(self, documents: Iterable[PatentDocument] = ()) -> None:
        self._docs: dict[str, PatentDocument] = {}
        for doc in documents:
            self.add(doc)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "CorpusStore":
        return cls(read_corpus_jsonl(path))

    def add(self, doc: PatentDocument) -> None:
        if doc.doc_id in self._docs:
            logger.warning("duplicate doc_id %s replaces earlier document", doc.doc_id)
        self._docs[doc.doc_id] = doc

    def get(self, doc_id: str) -> PatentDocument | None:
        return self._docs.get(doc_id)

    def doc_ids(self) -> list[str]:
        return sorted(self._docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def __len__(self) -> int:
        return len(self._docs)

    def __iter__(self) -> Iterator[PatentDocument]:
        for doc_id in self.doc_ids():
            yield self._docs[doc_id]
