"""Parser tests: claim-element flattening, sections, round trips."""

from __future__ import annotations

import random

import pytest

from claimsearch.corpus import (
    CorpusStore,
    Jurisdiction,
    MalformedXml,
    MissingDocId,
    SectionName,
    document_from_dict,
    document_to_dict,
    flatten_claim_elements,
    iter_application_xml,
    normalize_text,
    parse_application,
    read_corpus_jsonl,
    write_corpus_jsonl,
)

from conftest import HIP_CLAIM_XML, make_doc_xml


class TestClaimElements:
    def test_hip_protector_claim(self):
        doc = parse_application(HIP_CLAIM_XML)
        assert doc.doc_id == "US20080295019A1"
        assert doc.jurisdiction is Jurisdiction.US
        claim = doc.claim(1)
        texts = [e.text for e in claim.elements]
        depths = [e.depth for e in claim.elements]
        assert texts == [
            "A hip protecting device for inflating a pocket over a hip joint "
            "of a wearer of the device upon a fall comprising:",
            "a belt;",
            "a substantially gas impermeable first pocket fixedly suspended from said belt;",
            "an inflator attached to said first pocket.",
        ]
        assert depths == [0, 1, 1, 1]

    def test_zero_claims_is_not_an_error(self):
        xml = make_doc_xml("US1", abstract=["one liner"], body=[("", ["text"])])
        doc = parse_application(xml)
        assert doc.claims == []
        assert doc.sections_named(SectionName.CLAIMS) == []

    def test_flat_claim_single_element(self):
        xml = make_doc_xml("US1", claims=["A widget with a handle."])
        doc = parse_application(xml)
        elements = flatten_claim_elements(doc.claim(1))
        assert len(elements) == 1
        assert elements[0].text == "A widget with a handle."
        assert elements[0].depth == 0

    def test_three_level_nesting_flattens_in_document_order(self):
        claim_xml = (
            "<claim-text>A machine comprising:"
            "<claim-text>a frame;</claim-text>"
            "<claim-text>an arm including:"
            "<claim-text>a joint;</claim-text>"
            "<claim-text>a gripper.</claim-text>"
            "</claim-text>"
            "</claim-text>"
        )
        doc = parse_application(make_doc_xml("US1", claims=[claim_xml]))
        elements = flatten_claim_elements(doc.claim(1))
        assert [(e.text, e.depth) for e in elements] == [
            ("A machine comprising:", 0),
            ("a frame;", 1),
            ("an arm including:", 1),
            ("a joint;", 2),
            ("a gripper.", 2),
        ]

    def test_claim_reference_tag_text_is_kept_inline(self):
        claim_xml = (
            '<claim-text>The device of <claim-ref idref="CLM-00001">claim 1</claim-ref>'
            " wherein the belt is elastic.</claim-text>"
        )
        doc = parse_application(make_doc_xml("US1", claims=["x", claim_xml]))
        assert doc.claim(2).full_text == "The device of claim 1 wherein the belt is elastic."

    def test_roundtrip_elements_rebuild_full_text(self):
        rng = random.Random(7)
        for _ in range(50):
            n = rng.randint(1, 6)
            parts = ["Preamble of the claim comprising:"]
            parts += [f"element {i} with token{rng.randint(0, 99)};" for i in range(n)]
            inner = "".join(f"<claim-text>{p}</claim-text>" for p in parts[1:])
            doc = parse_application(
                make_doc_xml("US1", claims=[f"<claim-text>{parts[0]}{inner}</claim-text>"])
            )
            claim = doc.claim(1)
            joined = normalize_text(" ".join(e.text for e in flatten_claim_elements(claim)))
            assert joined == claim.full_text


class TestSections:
    def test_two_section_document_in_source_order(self):
        xml = make_doc_xml(
            "US77",
            abstract=["An abstract paragraph."],
            body=[("DETAILED DESCRIPTION", ["First.", "Second.", "Third."])],
        )
        doc = parse_application(xml)
        assert [s.name for s in doc.sections] == [
            SectionName.ABSTRACT,
            SectionName.DESCRIPTION,
        ]
        description = doc.sections[1]
        assert [p.number for p in description.paragraphs] == [1, 2, 3]
        assert [p.text for p in description.paragraphs] == ["First.", "Second.", "Third."]

    def test_heading_aliases_map_to_vocabulary(self):
        xml = make_doc_xml(
            "US5",
            body=[
                ("CROSS-REFERENCE TO RELATED APPLICATIONS", ["xref"]),
                ("BACKGROUND OF THE INVENTION", ["bg"]),
                ("SUMMARY", ["sum"]),
                ("BRIEF DESCRIPTION OF THE DRAWINGS", ["figs"]),
                ("DETAILED DESCRIPTION OF THE INVENTION", ["desc"]),
                ("SOMETHING ENTIRELY ELSE", ["other"]),
            ],
        )
        doc = parse_application(xml)
        assert [s.name for s in doc.sections] == [
            SectionName.CROSS_REF,
            SectionName.BACKGROUND,
            SectionName.SUMMARY,
            SectionName.BRIEF_FIG,
            SectionName.DESCRIPTION,
            SectionName.UNKNOWN,
        ]

    def test_bracket_markers_supply_numbers_and_are_stripped(self):
        xml = make_doc_xml(
            "US6",
            body=[("", ["[0005] Fifth paragraph.", "[0007] Seventh paragraph."])],
            numbered=False,
        )
        doc = parse_application(xml)
        paragraphs = doc.sections[0].paragraphs
        assert [(p.number, p.text) for p in paragraphs] == [
            (5, "Fifth paragraph."),
            (7, "Seventh paragraph."),
        ]

    def test_unnumbered_paragraphs_count_from_one(self):
        xml = make_doc_xml("US6", body=[("", ["a", "b"])], numbered=False)
        doc = parse_application(xml)
        assert [p.number for p in doc.sections[0].paragraphs] == [1, 2]

    def test_claims_surface_as_claims_section(self):
        doc = parse_application(HIP_CLAIM_XML)
        claims_sections = doc.sections_named(SectionName.CLAIMS)
        assert len(claims_sections) == 1
        assert claims_sections[0].paragraphs[0].number == 1
        assert claims_sections[0].paragraphs[0].text == doc.claim(1).full_text

    def test_paragraph_numbers_strictly_increase(self):
        doc = parse_application(HIP_CLAIM_XML)
        for section in doc.sections:
            numbers = [p.number for p in section.paragraphs]
            assert numbers == sorted(set(numbers))


class TestParsingContract:
    def test_determinism(self):
        once = parse_application(HIP_CLAIM_XML)
        twice = parse_application(HIP_CLAIM_XML)
        assert document_to_dict(once) == document_to_dict(twice)

    def test_malformed_xml(self):
        with pytest.raises(MalformedXml):
            parse_application(b"<claims><claim></claims>")

    def test_missing_doc_id(self):
        with pytest.raises(MissingDocId):
            parse_application(b"<us-patent-application><abstract/></us-patent-application>")

    def test_jurisdiction_override_and_inference(self):
        xml = make_doc_xml("EP123")
        assert parse_application(xml).jurisdiction is Jurisdiction.EP
        assert (
            parse_application(xml, Jurisdiction.OTHER).jurisdiction is Jurisdiction.OTHER
        )

    def test_jsonl_roundtrip(self, tmp_path):
        doc = parse_application(HIP_CLAIM_XML)
        path = tmp_path / "corpus.jsonl"
        write_corpus_jsonl([doc], path)
        loaded = list(read_corpus_jsonl(path))
        assert len(loaded) == 1
        assert document_to_dict(loaded[0]) == document_to_dict(doc)

    def test_dict_roundtrip(self, hip_doc):
        assert document_to_dict(document_from_dict(document_to_dict(hip_doc))) == (
            document_to_dict(hip_doc)
        )

    def test_bulk_file_splits_on_xml_declarations(self, tmp_path):
        blob = make_doc_xml("US1", claims=["a"]) + b"\n" + make_doc_xml("US2", claims=["b"])
        bulk = tmp_path / "bulk.xml"
        bulk.write_bytes(blob)
        entries = list(iter_application_xml(bulk))
        assert len(entries) == 2
        assert parse_application(entries[0]).doc_id == "US1"
        assert parse_application(entries[1]).doc_id == "US2"

    def test_directory_input_sorted(self, tmp_path):
        (tmp_path / "b.xml").write_bytes(make_doc_xml("US2"))
        (tmp_path / "a.xml").write_bytes(make_doc_xml("US1"))
        ids = [parse_application(x).doc_id for x in iter_application_xml(tmp_path)]
        assert ids == ["US1", "US2"]

    def test_corpus_store_lookup(self, small_corpus: CorpusStore):
        assert len(small_corpus) == 3
        assert small_corpus.get("US1000001").doc_id == "US1000001"
        assert small_corpus.get("missing") is None
        assert small_corpus.doc_ids() == ["EP2000001", "US1000001", "US1000002"]
