"""Shared fixture builders: synthetic patent XML and parsed documents."""

from __future__ import annotations

import pytest

from claimsearch.corpus import (
    Claim,
    ClaimElement,
    CorpusStore,
    Jurisdiction,
    Paragraph,
    PatentDocument,
    Section,
    SectionName,
    parse_application,
)

# The nested-claim XML shape both USPTO and EPO publish since 2001;
# mirrors the hip-protector publication used as the worked example.
HIP_CLAIM_XML = """<?xml version="1.0" encoding="UTF-8"?>
<us-patent-application>
  <us-bibliographic-data-application>
    <publication-reference>
      <document-id>
        <country>US</country>
        <doc-number>20080295019</doc-number>
        <kind>A1</kind>
      </document-id>
    </publication-reference>
  </us-bibliographic-data-application>
  <abstract>
    <p num="0000">A hip protecting device with an inflatable pocket.</p>
  </abstract>
  <description>
    <heading>BACKGROUND OF THE INVENTION</heading>
    <p num="0001">Hip fractures are a frequent injury among elderly people.</p>
    <heading>DETAILED DESCRIPTION</heading>
    <p num="0002">The belt carries a gas impermeable pocket and an inflator.</p>
  </description>
  <claims>
    <claim id="CLM-00001" num="00001">
      <claim-text>A hip protecting device for inflating a pocket over a hip joint of a wearer of the device upon a fall comprising:
        <claim-text>a belt;</claim-text>
        <claim-text>a substantially gas impermeable first pocket fixedly suspended from said belt;</claim-text>
        <claim-text>an inflator attached to said first pocket.</claim-text>
      </claim-text>
    </claim>
  </claims>
</us-patent-application>
"""


def make_doc_xml(
    doc_id: str,
    abstract: list[str] | None = None,
    body: list[tuple[str, list[str]]] | None = None,
    claims: list[str] | None = None,
    numbered: bool = True,
) -> bytes:
    """Build a USPTO-shaped XML document from plain text pieces.

    `body` is a list of (heading, paragraphs); paragraph numbering is
    continuous across the body when `numbered` is set.
    """
    country, number = doc_id[:2], doc_id[2:]
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        "<us-patent-application>",
        "<us-bibliographic-data-application><publication-reference><document-id>",
        f"<country>{country}</country><doc-number>{number}</doc-number><kind></kind>",
        "</document-id></publication-reference></us-bibliographic-data-application>",
    ]
    if abstract:
        parts.append("<abstract>")
        for text in abstract:
            parts.append(f"<p>{text}</p>")
        parts.append("</abstract>")
    if body:
        parts.append("<description>")
        counter = 0
        for heading, paragraphs in body:
            if heading:
                parts.append(f"<heading>{heading}</heading>")
            for text in paragraphs:
                counter += 1
                if numbered:
                    parts.append(f'<p num="{counter:04d}">{text}</p>')
                else:
                    parts.append(f"<p>{text}</p>")
        parts.append("</description>")
    if claims:
        parts.append("<claims>")
        for i, claim in enumerate(claims, start=1):
            parts.append(f'<claim id="CLM-{i:05d}" num="{i:05d}">')
            parts.append(claim if claim.lstrip().startswith("<claim-text") else f"<claim-text>{claim}</claim-text>")
            parts.append("</claim>")
        parts.append("</claims>")
    parts.append("</us-patent-application>")
    return "\n".join(parts).encode("utf-8")


def make_document(
    doc_id: str,
    sections: list[tuple[SectionName, list[tuple[int, str]]]] | None = None,
    claims: list[tuple[int, list[str]]] | None = None,
    jurisdiction: Jurisdiction = Jurisdiction.US,
) -> PatentDocument:
    """Assemble a PatentDocument directly (no XML round trip)."""
    section_objs = [
        Section(name=name, paragraphs=[Paragraph(n, t) for n, t in paragraphs])
        for name, paragraphs in (sections or [])
    ]
    claim_objs = []
    for number, element_texts in claims or []:
        elements = [ClaimElement(text, 0 if i == 0 else 1) for i, text in enumerate(element_texts)]
        claim_objs.append(
            Claim(number=number, elements=elements, full_text=" ".join(element_texts))
        )
    if claim_objs:
        section_objs.append(
            Section(
                name=SectionName.CLAIMS,
                paragraphs=[Paragraph(c.number, c.full_text) for c in claim_objs],
            )
        )
    return PatentDocument(
        doc_id=doc_id,
        jurisdiction=jurisdiction,
        sections=section_objs,
        claims=claim_objs,
    )


def words(prefix: str, count: int) -> str:
    """`count` distinct pseudo-words sharing a vocabulary prefix."""
    return " ".join(f"{prefix}{i}" for i in range(count))


@pytest.fixture
def hip_doc() -> PatentDocument:
    return parse_application(HIP_CLAIM_XML)


@pytest.fixture
def small_corpus() -> CorpusStore:
    """Three documents with disjoint vocabularies plus shared glue text."""
    docs = [
        make_document(
            "US1000001",
            sections=[
                (SectionName.ABSTRACT, [(1, words("alpha", 8))]),
                (SectionName.DESCRIPTION, [(1, words("alphabody", 12)), (2, words("alphamore", 12))]),
            ],
            claims=[(1, ["A device comprising:", words("alphaclaim", 10)])],
        ),
        make_document(
            "US1000002",
            sections=[
                (SectionName.ABSTRACT, [(1, words("beta", 8))]),
                (SectionName.DESCRIPTION, [(1, words("betabody", 12)), (2, words("betamore", 12))]),
            ],
            claims=[(1, ["A system comprising:", words("betaclaim", 10)])],
        ),
        make_document(
            "EP2000001",
            sections=[
                (SectionName.ABSTRACT, [(1, words("gamma", 8))]),
                (SectionName.DESCRIPTION, [(1, words("gammabody", 12))]),
            ],
            claims=[(1, ["A method comprising:", words("gammaclaim", 10)])],
        ),
    ]
    return CorpusStore(docs)
