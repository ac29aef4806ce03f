"""Novelty reasoning and evidence-grounded facet checking.

The centerpiece is a bipartite graph between contributions and limitations
drawn from the selected papers. A limitation is *addressed* when at least one
existing contribution has an edge into it. The proposed contribution is then
linked to limitations and classified:

* no links at all      -> undetermined
* every link addressed -> incremental
* any link unaddressed -> conceptually_novel

Checker output is only trusted when its evidence snippets are verbatim
substrings (modulo whitespace) of text actually stored for a selected paper.
A reply with any ungrounded snippet triggers exactly one full re-request;
ungrounded findings in the second reply are dropped individually.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

from .corpus import CorpusStore
from .document import FacetType, IdeaDocument, UnknownSegmentError
from .facets import detect_missing_facets
from .gateway import Gateway, RetryExhaustedError, TaskRequest

log = logging.getLogger(__name__)

LIMITATION_FAMILIES = ("limitations", "future_work")


class NoveltyCategory(str, Enum):
    UNDETERMINED = "undetermined"
    INCREMENTAL = "incremental"
    CONCEPTUALLY_NOVEL = "conceptually_novel"


class GraphError(Exception):
    """The contribution-limitation graph could not be built."""


class MissingFacetError(Exception):
    """An assessment needs a facet the idea does not currently state."""

    def __init__(self, facet_type: FacetType, needed_for: FacetType):
        self.facet_type = facet_type
        self.needed_for = needed_for
        super().__init__(
            f"cannot assess {needed_for.value}: the idea has no "
            f"{facet_type.value} statement"
        )


@dataclass(frozen=True)
class ContributionNode:
    node_id: str
    paper_id: str
    statement: str

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "paper_id": self.paper_id,
            "statement": self.statement,
        }


@dataclass(frozen=True)
class LimitationNode:
    node_id: str
    paper_id: str
    statement: str
    kind: str  # "limitations" or "future_work"

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "paper_id": self.paper_id,
            "statement": self.statement,
            "kind": self.kind,
        }


@dataclass
class ContributionLimitationGraph:
    contributions: tuple[ContributionNode, ...]
    limitations: tuple[LimitationNode, ...]
    edges: tuple[tuple[str, str], ...]  # (contribution_id, limitation_id)

    def contribution_ids(self) -> set[str]:
        return {node.node_id for node in self.contributions}

    def limitation_ids(self) -> set[str]:
        return {node.node_id for node in self.limitations}

    def addressed_limitations(self) -> set[str]:
        """Limitation nodes with at least one incoming contribution edge."""
        return {limitation for _, limitation in self.edges}

    def to_dict(self) -> dict:
        return {
            "contributions": [n.to_dict() for n in self.contributions],
            "limitations": [n.to_dict() for n in self.limitations],
            "edges": [list(e) for e in self.edges],
        }


@dataclass
class ProposedLinks:
    proposed_statement: str
    linked: tuple[str, ...]
    rationales: dict[str, str] = field(default_factory=dict)


@dataclass
class NoveltyVerdict:
    category: NoveltyCategory
    addressed_links: tuple[str, ...]
    unaddressed_links: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "addressed_links": list(self.addressed_links),
            "unaddressed_links": list(self.unaddressed_links),
        }

    @staticmethod
    def from_dict(data: dict) -> "NoveltyVerdict":
        return NoveltyVerdict(
            category=NoveltyCategory(data["category"]),
            addressed_links=tuple(data["addressed_links"]),
            unaddressed_links=tuple(data["unaddressed_links"]),
        )


@dataclass
class Finding:
    claim: str
    evidence_snippet: str
    paper_id: str
    section: str

    def to_dict(self) -> dict:
        return {
            "claim": self.claim,
            "evidence_snippet": self.evidence_snippet,
            "paper_id": self.paper_id,
            "section": self.section,
        }

    @staticmethod
    def from_dict(data: dict) -> "Finding":
        return Finding(
            claim=data["claim"],
            evidence_snippet=data["evidence_snippet"],
            paper_id=data["paper_id"],
            section=data["section"],
        )


@dataclass
class Assessment:
    facet_type: FacetType
    verdict_summary: str
    findings: list[Finding]
    suggested_rewrite: str
    rewrite_elements: dict[str, bool]
    novelty: NoveltyVerdict | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "facet_type": self.facet_type.value,
            "verdict_summary": self.verdict_summary,
            "findings": [f.to_dict() for f in self.findings],
            "suggested_rewrite": self.suggested_rewrite,
            "rewrite_elements": dict(self.rewrite_elements),
            "novelty": self.novelty.to_dict() if self.novelty else None,
            "warnings": list(self.warnings),
        }

    @staticmethod
    def from_dict(data: dict) -> "Assessment":
        return Assessment(
            facet_type=FacetType(data["facet_type"]),
            verdict_summary=data["verdict_summary"],
            findings=[Finding.from_dict(f) for f in data["findings"]],
            suggested_rewrite=data["suggested_rewrite"],
            rewrite_elements=dict(data["rewrite_elements"]),
            novelty=(
                NoveltyVerdict.from_dict(data["novelty"]) if data["novelty"] else None
            ),
            warnings=list(data["warnings"]),
        )


# -- graph construction --------------------------------------------------------


def collect_nodes(
    store: CorpusStore, selection: list[str]
) -> tuple[list[ContributionNode], list[LimitationNode]]:
    """Enumerate bipartite nodes in a stable order.

    Papers are visited in sorted id order and statements in stored order, so
    node ids do not depend on how the selection list happens to be arranged.
    """
    contributions: list[ContributionNode] = []
    limitations: list[LimitationNode] = []
    for paper_id in sorted(set(selection)):
        paper = store.get(paper_id)
        for statement in paper.facets.family("contributions"):
            contributions.append(
                ContributionNode(
                    f"c{len(contributions) + 1}", paper_id, statement.statement
                )
            )
        for family in LIMITATION_FAMILIES:
            for statement in paper.facets.family(family):
                limitations.append(
                    LimitationNode(
                        f"l{len(limitations) + 1}",
                        paper_id,
                        statement.statement,
                        kind=family,
                    )
                )
    return contributions, limitations


def _node_lines(nodes) -> str:
    return "\n".join(f"{n.node_id} ({n.paper_id}): {n.statement}" for n in nodes)


def build_graph(
    store: CorpusStore, selection: list[str], gateway: Gateway
) -> ContributionLimitationGraph:
    """Build the contribution-limitation graph over the selected papers.

    If either side is empty there is nothing to connect and no model call is
    made. Edges naming unknown node ids are dropped with a warning.
    """
    contributions, limitations = collect_nodes(store, selection)
    graph = ContributionLimitationGraph(
        tuple(contributions), tuple(limitations), edges=()
    )
    if not contributions or not limitations:
        return graph
    request = TaskRequest.for_template(
        "build_graph",
        {
            "contributions": _node_lines(contributions),
            "limitations": _node_lines(limitations),
        },
    )
    try:
        response = gateway.execute(request)
    except RetryExhaustedError as exc:
        raise GraphError(f"graph construction failed: {exc}") from exc
    contribution_ids = graph.contribution_ids()
    limitation_ids = graph.limitation_ids()
    edges: list[tuple[str, str]] = []
    for entry in response.parsed["edges"]:
        edge = (entry["contribution"], entry["limitation"])
        if edge[0] not in contribution_ids or edge[1] not in limitation_ids:
            log.warning("edge %s names an unknown node, dropped", edge)
            continue
        if edge not in edges:
            edges.append(edge)
    graph.edges = tuple(edges)
    return graph


def link_proposed(
    proposed_statement: str, graph: ContributionLimitationGraph, gateway: Gateway
) -> ProposedLinks:
    """Link the idea's proposed contribution to the graph's limitations."""
    if not graph.limitations:
        return ProposedLinks(proposed_statement, linked=())
    request = TaskRequest.for_template(
        "link_contribution",
        {
            "proposed_contribution": proposed_statement,
            "limitations": _node_lines(graph.limitations),
        },
    )
    response = gateway.execute(request)
    limitation_ids = graph.limitation_ids()
    linked: list[str] = []
    rationales: dict[str, str] = {}
    for entry in response.parsed["links"]:
        node_id = entry["limitation"]
        if node_id not in limitation_ids:
            log.warning("link to unknown limitation %r dropped", node_id)
            continue
        if node_id not in linked:
            linked.append(node_id)
            rationales[node_id] = entry["rationale"]
    return ProposedLinks(proposed_statement, tuple(linked), rationales)


def classify_novelty(
    graph: ContributionLimitationGraph, linked: tuple[str, ...] | list[str]
) -> NoveltyVerdict:
    """Pure classification of the proposed contribution.

    ``linked`` must only contain limitation node ids present in the graph.
    """
    limitation_ids = graph.limitation_ids()
    unknown = [node_id for node_id in linked if node_id not in limitation_ids]
    if unknown:
        raise ValueError(f"linked ids not in graph: {unknown}")
    addressed = graph.addressed_limitations()
    addressed_links = tuple(sorted(n for n in linked if n in addressed))
    unaddressed_links = tuple(sorted(n for n in linked if n not in addressed))
    if not linked:
        category = NoveltyCategory.UNDETERMINED
    elif unaddressed_links:
        category = NoveltyCategory.CONCEPTUALLY_NOVEL
    else:
        category = NoveltyCategory.INCREMENTAL
    return NoveltyVerdict(category, addressed_links, unaddressed_links)


NOVELTY_SENTENCES = {
    NoveltyCategory.UNDETERMINED: (
        "Novelty is undetermined: the proposed contribution is not linked to "
        "any limitation in the selected papers."
    ),
    NoveltyCategory.INCREMENTAL: (
        "The proposed contribution reads as incremental: every limitation it "
        "links to is already addressed by an existing contribution."
    ),
    NoveltyCategory.CONCEPTUALLY_NOVEL: (
        "The proposed contribution appears conceptually novel: it links to at "
        "least one limitation that no selected paper addresses."
    ),
}


# -- evidence grounding ----------------------------------------------------------


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def snippet_is_grounded(
    snippet: str, paper_id: str, store: CorpusStore, selection: list[str]
) -> bool:
    """True when the snippet appears verbatim (modulo whitespace) in text we
    actually hold for a selected paper."""
    needle = normalize_ws(snippet)
    if not needle:
        return False
    if paper_id not in selection or paper_id not in store:
        return False
    paper = store.get(paper_id)
    return any(
        needle in normalize_ws(text) for text in paper.stored_texts().values() if text
    )


def validate_findings(
    findings: list[Finding], store: CorpusStore, selection: list[str]
) -> tuple[list[Finding], list[tuple[Finding, str]]]:
    valid: list[Finding] = []
    rejected: list[tuple[Finding, str]] = []
    for finding in findings:
        if finding.paper_id not in selection:
            rejected.append((finding, "paper is not in the current selection"))
        elif finding.paper_id not in store:
            rejected.append((finding, "paper is not in the corpus"))
        elif not snippet_is_grounded(
            finding.evidence_snippet, finding.paper_id, store, selection
        ):
            rejected.append((finding, "snippet does not occur in the stored text"))
        else:
            valid.append(finding)
    return valid, rejected


# -- checkers --------------------------------------------------------------------


def selection_digest(store: CorpusStore, selection: list[str]) -> str:
    """Compact textual view of the selected papers for checker prompts."""
    parts: list[str] = []
    for paper_id in selection:
        paper = store.get(paper_id)
        parts.append(f"[{paper_id}] {paper.title}")
        if paper.abstract:
            parts.append(paper.abstract)
        for family in ("problems", "contributions", "evaluations", *LIMITATION_FAMILIES):
            for statement in paper.facets.family(family):
                parts.append(f"  {family}: {statement.statement}")
    return "\n".join(parts)


def _statement_lines(store: CorpusStore, selection: list[str], family: str) -> str:
    lines = [
        f"{paper_id}: {statement.statement}"
        for paper_id in selection
        for statement in store.get(paper_id).facets.family(family)
    ]
    return "\n".join(lines) if lines else "(none)"


def _grounded_checker_call(
    template_id: str,
    variables: dict,
    store: CorpusStore,
    selection: list[str],
    gateway: Gateway,
) -> tuple[dict, list[Finding], list[str]]:
    """Run a checker task and enforce evidence grounding.

    Any ungrounded finding in the first reply voids it entirely and the task
    is re-requested once; the second reply stands, minus findings that are
    individually ungrounded.
    """
    warnings: list[str] = []
    request = TaskRequest.for_template(template_id, variables)
    response = gateway.execute(request)
    findings = [Finding.from_dict(f) for f in response.parsed["findings"]]
    valid, rejected = validate_findings(findings, store, selection)
    if not rejected:
        return response.parsed, valid, warnings
    for finding, reason in rejected:
        warnings.append(
            f"rejected evidence for {finding.paper_id!r}: {reason}; re-requesting"
        )
        log.warning(
            "%s cited ungrounded evidence from %s (%s)",
            template_id,
            finding.paper_id,
            reason,
        )
    retry = gateway.execute(request)
    findings = [Finding.from_dict(f) for f in retry.parsed["findings"]]
    valid, rejected = validate_findings(findings, store, selection)
    for finding, reason in rejected:
        warnings.append(
            f"dropped evidence for {finding.paper_id!r} after re-request: {reason}"
        )
        log.warning("dropped ungrounded finding from %s (%s)", finding.paper_id, reason)
    return retry.parsed, valid, warnings


def assess_problem(
    facet_text: str,
    store: CorpusStore,
    selection: list[str],
    gateway: Gateway,
    steering: str = "",
) -> Assessment:
    warnings: list[str] = []
    statements = _statement_lines(store, selection, "problems")
    if statements == "(none)":
        warnings.append("no problem statements extracted from the selection")
    parsed, findings, call_warnings = _grounded_checker_call(
        "problem_checker",
        {
            "facet_text": facet_text,
            "problem_statements": statements,
            "paper_digest": selection_digest(store, selection),
            "steering": steering or "(none)",
        },
        store,
        selection,
        gateway,
    )
    return Assessment(
        facet_type=FacetType.PROBLEM,
        verdict_summary=parsed["verdict_summary"],
        findings=findings,
        suggested_rewrite=parsed["suggested_rewrite"],
        rewrite_elements=dict(parsed["rewrite_elements"]),
        warnings=warnings + call_warnings,
    )


def assess_contribution(
    facet_text: str,
    problem_text: str,
    store: CorpusStore,
    selection: list[str],
    gateway: Gateway,
    steering: str = "",
) -> Assessment:
    graph = build_graph(store, selection, gateway)
    links = link_proposed(facet_text, graph, gateway)
    verdict = classify_novelty(graph, links.linked)
    nodes_by_id = {n.node_id: n for n in graph.limitations}
    linked_lines = [
        "{} [{}] ({}): {}".format(
            node_id,
            "addressed" if node_id in verdict.addressed_links else "unaddressed",
            nodes_by_id[node_id].paper_id,
            nodes_by_id[node_id].statement,
        )
        for node_id in links.linked
    ]
    parsed, findings, call_warnings = _grounded_checker_call(
        "contribution_checker",
        {
            "novelty_verdict": verdict.category.value,
            "linked_limitations": "\n".join(linked_lines) or "(none)",
            "facet_text": facet_text,
            "problem_text": problem_text or "(no problem stated)",
            "contribution_statements": _statement_lines(
                store, selection, "contributions"
            ),
            "paper_digest": selection_digest(store, selection),
            "steering": steering or "(none)",
        },
        store,
        selection,
        gateway,
    )
    summary = f"{NOVELTY_SENTENCES[verdict.category]} {parsed['verdict_summary']}"
    return Assessment(
        facet_type=FacetType.CONTRIBUTION,
        verdict_summary=summary,
        findings=findings,
        suggested_rewrite=parsed["suggested_rewrite"],
        rewrite_elements=dict(parsed["rewrite_elements"]),
        novelty=verdict,
        warnings=call_warnings,
    )


def assess_evaluation(
    facet_text: str,
    problem_text: str | None,
    contribution_text: str | None,
    store: CorpusStore,
    selection: list[str],
    gateway: Gateway,
    steering: str = "",
) -> Assessment:
    if not problem_text:
        raise MissingFacetError(FacetType.PROBLEM, needed_for=FacetType.EVALUATION)
    if not contribution_text:
        raise MissingFacetError(FacetType.CONTRIBUTION, needed_for=FacetType.EVALUATION)
    warnings: list[str] = []
    statements = _statement_lines(store, selection, "evaluations")
    if statements == "(none)":
        warnings.append("no evaluation exemplars extracted from the selection")
    parsed, findings, call_warnings = _grounded_checker_call(
        "evaluation_checker",
        {
            "facet_text": facet_text,
            "problem_text": problem_text,
            "contribution_text": contribution_text,
            "evaluation_statements": statements,
            "paper_digest": selection_digest(store, selection),
            "steering": steering or "(none)",
        },
        store,
        selection,
        gateway,
    )
    return Assessment(
        facet_type=FacetType.EVALUATION,
        verdict_summary=parsed["verdict_summary"],
        findings=findings,
        suggested_rewrite=parsed["suggested_rewrite"],
        rewrite_elements=dict(parsed["rewrite_elements"]),
        warnings=warnings + call_warnings,
    )


# -- whole-idea assessment ---------------------------------------------------------


@dataclass
class FullAssessmentResult:
    assessments: dict[FacetType, Assessment]
    missing: set[FacetType]
    errors: list[str] = field(default_factory=list)


def facet_text(doc: IdeaDocument, facet_type: FacetType) -> str | None:
    """Concatenated text of all segments of one type.

    Stale segments still contribute: the stale flag means "re-check advised
    after a neighbouring edit", not that the text stopped existing.
    """
    spans = [
        segment.covers(doc.text)
        for segment in doc.segments
        if segment.facet_type == facet_type
    ]
    return "\n".join(spans) if spans else None


def full_assessment(
    doc: IdeaDocument,
    store: CorpusStore,
    selection: list[str],
    gateway: Gateway,
    steering: str = "",
) -> FullAssessmentResult:
    """Assess every core facet currently stated in the idea.

    Failures are isolated per facet so one bad reply cannot void the rest.
    """
    missing = detect_missing_facets(doc)
    result = FullAssessmentResult(assessments={}, missing=missing)
    problem = facet_text(doc, FacetType.PROBLEM)
    contribution = facet_text(doc, FacetType.CONTRIBUTION)
    evaluation = facet_text(doc, FacetType.EVALUATION)

    if problem is not None:
        try:
            result.assessments[FacetType.PROBLEM] = assess_problem(
                problem, store, selection, gateway, steering
            )
        except RetryExhaustedError as exc:
            result.errors.append(f"problem: {exc}")
    if contribution is not None:
        try:
            result.assessments[FacetType.CONTRIBUTION] = assess_contribution(
                contribution, problem or "", store, selection, gateway, steering
            )
        except (RetryExhaustedError, GraphError) as exc:
            result.errors.append(f"contribution: {exc}")
    if evaluation is not None:
        try:
            result.assessments[FacetType.EVALUATION] = assess_evaluation(
                evaluation, problem, contribution, store, selection, gateway, steering
            )
        except (RetryExhaustedError, MissingFacetError) as exc:
            result.errors.append(f"evaluation: {exc}")
    return result


# -- edit impact -------------------------------------------------------------------


def detect_affected_facets(
    doc: IdeaDocument,
    edited_segment_id: str,
    analysis: str,
    gateway: Gateway,
) -> set[str]:
    """Which other segments does a change to one segment put in doubt?

    Fails open: when the model cannot answer, nothing is flagged and a
    warning is logged, leaving all segments current.
    """
    by_id = {segment.segment_id: segment for segment in doc.segments}
    if edited_segment_id not in by_id:
        raise UnknownSegmentError(edited_segment_id)
    rendered = "\n".join(
        f"{segment.segment_id} ({segment.facet_type.value}): {segment.covers(doc.text)}"
        for segment in doc.segments
    )
    request = TaskRequest.for_template(
        "affected_facets",
        {
            "idea_text": doc.text,
            "segments": rendered,
            "edited_segment_id": edited_segment_id,
            "edited_text": by_id[edited_segment_id].covers(doc.text),
            "analysis": analysis or "(none)",
        },
    )
    try:
        response = gateway.execute(request)
    except RetryExhaustedError as exc:
        log.warning("affected-facet detection failed, flagging nothing: %s", exc)
        return set()
    affected = set(response.parsed["affected"])
    unknown = affected - set(by_id)
    for node_id in sorted(unknown):
        log.warning("affected segment %r does not exist, ignored", node_id)
    return (affected & set(by_id)) - {edited_segment_id}
