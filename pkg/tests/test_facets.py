import itertools
import json

import pytest

from litloop import facets as facets_mod
from litloop.corpus import FetchStatus
from litloop.document import FacetType, IdeaDocument, set_segments, validate_segments
from litloop.facets import (
    FACET_FAMILIES,
    SegmentationError,
    SegmentationResult,
    detect_missing_facets,
    extract_paper_facets,
    segment_idea,
)
from litloop.gateway import register_mock
from litloop.mock import MockScript
from litloop.prompts import PROMPT_VERSION
from tests.support import make_doc, make_paper

IDEA = (
    "Verification tools break on informal language. "
    "We will couple a prover with a language model. "
    "We will measure proof success on a held-out suite."
)


def extraction_payload(*statements):
    return {
        "statements": [
            {"statement": text, "source_section": section, "citations": citations}
            for text, section, citations in statements
        ]
    }


def empty_families_script() -> MockScript:
    return MockScript().reply("extract_facets", extraction_payload())


def segmentation_payload(*pairs):
    return {"segments": [{"facet_type": facet, "text": text} for facet, text in pairs]}


# -- paper facet extraction -----------------------------------------------------


def test_extraction_fills_matching_family():
    paper = make_paper("P1")
    paper.sections = {"introduction": "We contribute a prover. It cites prior work."}
    paper.fetch_status = FetchStatus.FULL_TEXT
    script = (
        MockScript()
        .reply(
            "extract_facets",
            extraction_payload(("We contribute a prover.", "introduction", ["X"])),
            match={"family": "contributions"},
        )
        .reply("extract_facets", extraction_payload())
    )
    gateway = register_mock(script)
    result = extract_paper_facets(paper, gateway)
    assert len(result.contributions) == 1
    assert result.contributions[0].citations == ("X",)
    assert result.problems == []


def test_metadata_only_paper_yields_empty_facets_without_calls():
    paper = make_paper("P1")
    paper.abstract = ""
    gateway = register_mock(MockScript())
    provider = gateway._bindings["mock"]
    result = extract_paper_facets(paper, gateway)
    assert result.is_empty()
    assert provider.call_count == 0


def test_abstract_only_paper_extracts_from_abstract():
    paper = make_paper("P1")
    paper.abstract = "Everything is in the abstract."
    script = MockScript().reply(
        "extract_facets",
        extraction_payload(("Everything is in the abstract.", "abstract", [])),
        match={"family": "motivations"},
    ).reply("extract_facets", extraction_payload())
    gateway = register_mock(script)
    result = extract_paper_facets(paper, gateway)
    assert result.motivations[0].source_section == "abstract"


def test_limitation_text_preserved_verbatim():
    gap = "the brittleness in commonsense formalization"
    paper = make_paper("P1")
    paper.sections = {"discussion": f"A known gap is {gap}."}
    script = (
        MockScript()
        .reply(
            "extract_facets",
            extraction_payload((gap, "discussion", [])),
            match={"family": "limitations"},
        )
        .reply("extract_facets", extraction_payload())
    )
    result = extract_paper_facets(paper, register_mock(script))
    assert result.limitations[0].statement == gap


def test_family_failure_is_isolated_and_retried_later():
    paper = make_paper("P1")
    paper.sections = {"intro": "Text."}
    script = (
        MockScript()
        .add("extract_facets", "junk", "junk", "junk", match={"family": "problems"})
        .reply("extract_facets", extraction_payload(("S.", "intro", [])))
    )
    gateway = register_mock(script)
    result = extract_paper_facets(paper, gateway)
    assert result.problems == []
    assert len(result.contributions) == 1
    assert "problems" not in paper.extraction_versions
    assert paper.extraction_versions["contributions"] == PROMPT_VERSION

    # A second pass re-runs only the failed family.
    provider = gateway._bindings["mock"]
    calls_before = provider.call_count
    extract_paper_facets(paper, gateway)
    assert provider.call_count == calls_before + 3  # three more failed attempts


def test_extraction_cached_by_prompt_version():
    paper = make_paper("P1")
    paper.sections = {"intro": "Text."}
    gateway = register_mock(empty_families_script())
    provider = gateway._bindings["mock"]
    extract_paper_facets(paper, gateway)
    first_pass = provider.call_count
    assert first_pass == len(FACET_FAMILIES)
    extract_paper_facets(paper, gateway)
    assert provider.call_count == first_pass


def test_chunked_extraction_concatenates_statements(monkeypatch):
    monkeypatch.setattr(facets_mod, "CHUNK_CHARS", 40)
    paper = make_paper("P1")
    paper.sections = {"a": "x" * 35, "b": "y" * 35}
    script = MockScript().add(
        "extract_facets",
        json.dumps(extraction_payload(("From a chunk.", "a", []))),
    )
    gateway = register_mock(script)
    provider = gateway._bindings["mock"]
    result = extract_paper_facets(paper, gateway)
    # Two chunks per family: statements concatenated, one call per chunk.
    assert provider.call_count == 2 * len(FACET_FAMILIES)
    assert len(result.problems) == 2


def test_chunk_sections_packs_and_splits():
    chunks = facets_mod._chunk_sections({"a": "x" * 30, "b": "y" * 30, "c": "z" * 90}, 70)
    labels = [[label for label, _ in chunk] for chunk in chunks]
    assert labels == [["a", "b"], ["c"], ["c"]]
    assert all(sum(len(t) for _, t in chunk) <= 70 for chunk in chunks)
    joined = "".join(text for chunk in chunks for label, text in chunk if label == "c")
    assert joined == "z" * 90


# -- idea segmentation ------------------------------------------------------------


def three_way_script() -> MockScript:
    return MockScript().reply(
        "segment_idea",
        segmentation_payload(
            ("problem", "Verification tools break on informal language."),
            ("contribution", "We will couple a prover with a language model."),
            ("evaluation", "We will measure proof success on a held-out suite."),
        ),
    )


def test_segment_idea_three_facets():
    result = segment_idea(IDEA, register_mock(three_way_script()))
    assert len(result.segments) == 3
    assert result.missing == set()
    for facet_type, (start, end) in result.segments:
        assert IDEA[start:end]


def test_segment_spans_are_verbatim_and_valid():
    result = segment_idea(IDEA, register_mock(three_way_script()))
    segments = result.to_facet_segments()
    # Oracle: the core-model validator accepts the normalized spans as-is.
    ordered = validate_segments(IDEA, segments)
    assert [s.segment_id for s in ordered] == [
        "problem-1",
        "contribution-1",
        "evaluation-1",
    ]
    doc = set_segments(IdeaDocument.create("d", IDEA), segments)
    assert doc.segment_text("contribution-1").startswith("We will couple")


def test_segment_idea_missing_evaluation():
    script = MockScript().reply(
        "segment_idea",
        segmentation_payload(
            ("problem", "Verification tools break on informal language."),
            ("contribution", "We will couple a prover with a language model."),
        ),
    )
    result = segment_idea(IDEA, register_mock(script))
    assert result.missing == {FacetType.EVALUATION}


def test_overlapping_spans_keep_earlier_truncate_later():
    first = "Verification tools break on informal language. We will couple"
    second = "We will couple a prover with a language model."
    script = MockScript().reply(
        "segment_idea",
        segmentation_payload(("problem", first), ("contribution", second)),
    )
    result = segment_idea(IDEA, register_mock(script))
    assert len(result.segments) == 2
    validate_segments(IDEA, result.to_facet_segments())
    problem_span = result.segments[0][1]
    contribution_span = result.segments[1][1]
    assert problem_span == (0, len(first))
    assert contribution_span[0] == len(first)


def test_swallowed_span_dropped():
    outer = "Verification tools break on informal language. We will couple a prover"
    inner = "tools break on informal"
    script = MockScript().reply(
        "segment_idea",
        segmentation_payload(("problem", outer), ("contribution", inner)),
    )
    result = segment_idea(IDEA, register_mock(script))
    assert [facet for facet, _ in result.segments] == [FacetType.PROBLEM]
    assert any("swallowed" in note for note in result.dropped)


def test_unlocatable_span_dropped_with_warning():
    script = MockScript().reply(
        "segment_idea",
        segmentation_payload(
            ("problem", "Verification tools break on informal language."),
            ("evaluation", "A sentence that simply is not there at all, not even close."),
        ),
    )
    result = segment_idea(IDEA, register_mock(script))
    assert [facet for facet, _ in result.segments] == [FacetType.PROBLEM]
    assert len(result.dropped) == 1


def test_paraphrased_span_anchored_by_common_substring():
    verbatim = "We will couple a prover with a language model."
    paraphrase = verbatim[:-1] + "s."  # near-identical, longest common run >= 80%
    script = MockScript().reply(
        "segment_idea", segmentation_payload(("contribution", paraphrase))
    )
    result = segment_idea(IDEA, register_mock(script))
    assert len(result.segments) == 1
    start, end = result.segments[0][1]
    assert IDEA[start:end].startswith("We will couple")


def test_all_spans_dropped_is_an_error():
    script = MockScript().reply(
        "segment_idea",
        segmentation_payload(("problem", "completely fabricated text zzz qqq")),
    )
    with pytest.raises(SegmentationError):
        segment_idea(IDEA, register_mock(script))


def test_empty_model_output_is_empty_result():
    script = MockScript().reply("segment_idea", segmentation_payload())
    result = segment_idea(IDEA, register_mock(script))
    assert result.segments == []
    assert result.missing == set(FacetType)


def test_empty_idea_rejected():
    with pytest.raises(ValueError):
        segment_idea("  ", register_mock(MockScript()))


# -- missing facet detection -------------------------------------------------------


def test_detect_missing_facets_exhaustive_against_set_difference():
    text = "abcdefghij"
    all_types = [FacetType.PROBLEM, FacetType.CONTRIBUTION, FacetType.EVALUATION]
    for present_count in range(4):
        for present in itertools.combinations(all_types, present_count):
            ranges = [(i * 3, i * 3 + 2) for i in range(len(present))]
            doc = IdeaDocument.create("d", text)
            segments = SegmentationResult(
                segments=[(facet, span) for facet, span in zip(present, ranges)],
                missing=set(),
            ).to_facet_segments()
            if segments:
                doc = set_segments(doc, segments)
            assert detect_missing_facets(doc) == set(all_types) - set(present)


def test_detect_missing_counts_only_current_segments():
    doc = make_doc("one two three", [(0, 3), (4, 7)])
    from litloop.document import SegmentStatus, flag_segments

    flagged = flag_segments(doc, {"seg-0"}, SegmentStatus.STALE)
    missing = detect_missing_facets(flagged)
    assert FacetType.PROBLEM in missing
    assert FacetType.CONTRIBUTION not in missing
