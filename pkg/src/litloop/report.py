"""Plain-text assessment report.

The report is a pure function of session state: no clocks, no counters
outside the session, stable ordering everywhere, so exporting twice yields
identical bytes. Papers cited by any finding are always present in the
manifest, which makes the document self-contained.
"""

from __future__ import annotations

from .document import SegmentStatus
from .facets import detect_missing_facets
from .pivot import normalize_ws

RULE = "=" * 70
THIN = "-" * 70


def _wrap_quote(text: str) -> str:
    return '"' + normalize_ws(text) + '"'


def _segment_lines(session) -> list[str]:
    doc = session.doc
    lines = []
    if not doc.segments:
        lines.append("(no facet segments)")
    for segment in doc.segments:
        status = "stale" if segment.status is SegmentStatus.STALE else "current"
        lines.append(
            f"{segment.segment_id} [{segment.facet_type.value}, {status}] "
            f"chars {segment.start}-{segment.end}"
        )
        lines.append(f"  {_wrap_quote(segment.covers(doc.text))}")
    missing = sorted(f.value for f in detect_missing_facets(doc))
    lines.append(f"missing facets: {', '.join(missing) if missing else 'none'}")
    return lines


def _assessment_lines(record) -> list[str]:
    assessment = record.assessment
    lines = [
        f"[{record.assessment_id}] facet={record.facet_type.value} "
        f"segment={record.segment_id} status={record.status}",
        f"selection: {', '.join(record.selection)}",
        f"verdict: {assessment.verdict_summary}",
    ]
    if assessment.novelty is not None:
        novelty = assessment.novelty
        addressed = ", ".join(novelty.addressed_links) or "-"
        unaddressed = ", ".join(novelty.unaddressed_links) or "-"
        lines.append(
            f"novelty: {novelty.category.value} "
            f"(addressed: {addressed}; unaddressed: {unaddressed})"
        )
    if assessment.findings:
        lines.append(f"findings ({len(assessment.findings)}):")
        for i, finding in enumerate(assessment.findings, start=1):
            lines.append(f"  {i}. {finding.claim}")
            lines.append(
                f"     evidence [{finding.paper_id} / {finding.section}]: "
                f"{_wrap_quote(finding.evidence_snippet)}"
            )
    else:
        lines.append("findings: none")
    lines.append(f"suggested rewrite: {assessment.suggested_rewrite}")
    elements = ", ".join(
        f"{name}={'yes' if value else 'no'}"
        for name, value in sorted(assessment.rewrite_elements.items())
    )
    lines.append(f"rewrite elements: {elements}")
    if record.affected:
        lines.append(f"affected segments flagged: {', '.join(record.affected)}")
    for warning in assessment.warnings:
        lines.append(f"warning: {warning}")
    return lines


def _cited_paper_ids(session) -> list[str]:
    cited = set()
    for record in session.assessments:
        for finding in record.assessment.findings:
            cited.add(finding.paper_id)
    return sorted(cited)


def render_report(session) -> str:
    lines: list[str] = [
        RULE,
        "IDEA ASSESSMENT REPORT",
        RULE,
        f"session: {session.session_id}",
        f"idea version: {session.doc.version}",
        "",
        "IDEA",
        THIN,
        session.doc.text,
        "",
        "FACET SEGMENTS",
        THIN,
        *_segment_lines(session),
        "",
        f"ASSESSMENTS ({len(session.assessments)})",
        THIN,
    ]
    for record in session.assessments:
        lines.extend(_assessment_lines(record))
        lines.append("")
    if session.rewrite_log:
        lines.append("REWRITE DECISIONS")
        lines.append(THIN)
        for entry in session.rewrite_log:
            lines.append(
                f"{entry['assessment_id']}: {entry['action']} ({entry['note']})"
            )
        lines.append("")

    lines.append("EVIDENCE APPENDIX")
    lines.append(THIN)
    any_evidence = False
    for record in session.assessments:
        for i, finding in enumerate(record.assessment.findings, start=1):
            any_evidence = True
            lines.append(
                f"[{record.assessment_id}.{i}] {finding.paper_id} "
                f"({finding.section}): {_wrap_quote(finding.evidence_snippet)}"
            )
    if not any_evidence:
        lines.append("(no evidence cited)")
    lines.append("")

    lines.append("CORPUS MANIFEST")
    lines.append(THIN)
    cited = _cited_paper_ids(session)
    lines.append(
        f"cited in assessments ({len(cited)}): {', '.join(cited) if cited else 'none'}"
    )
    for paper_id in sorted(session.store.papers):
        paper = session.store.get(paper_id)
        relevance = paper.relevance.value if paper.relevance else "unclassified"
        marker = " *cited*" if paper_id in cited else ""
        lines.append(
            f"{paper_id}  {paper.title or '(untitled)'}  "
            f"[{paper.provenance.value}, {paper.fetch_status.value}, {relevance}]"
            f"{marker}"
        )
    by_provenance = {"seed_retrieval": 0, "citation_expansion": 0, "user_added": 0}
    for paper in session.store.papers.values():
        by_provenance[paper.provenance.value] += 1
    lines.append(
        "summary: {} papers ({} seed, {} expanded, {} user-added); "
        "{} selected; {} assessments".format(
            len(session.store),
            by_provenance["seed_retrieval"],
            by_provenance["citation_expansion"],
            by_provenance["user_added"],
            len(session.selection),
            len(session.assessments),
        )
    )
    if session.errors:
        lines.append("")
        lines.append("ERRORS")
        lines.append(THIN)
        lines.extend(session.errors)
    lines.append("")
    return "\n".join(lines)
