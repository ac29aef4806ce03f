"""Prompt templates, one per model-facing operation.

Each template renders with ``str.format`` over named variables; the registry
maps template_id -> (task class, template text). ``PROMPT_VERSION`` is bumped
whenever any template text changes and is part of every extraction cache key.
"""

from __future__ import annotations

from string import Formatter

PROMPT_VERSION = "p1"

_JSON_ONLY = "Reply with a single JSON object and nothing else."

TEMPLATES: dict[str, tuple[str, str]] = {
    # (task_class, template)
    "segment_idea": (
        "structured",
        "You split a draft research idea into its structural facets.\n"
        "Facet types: problem (what is wrong or unsolved), contribution (what the\n"
        "researcher proposes to build or show), evaluation (how success will be measured).\n"
        "Copy each facet span VERBATIM from the idea; do not paraphrase. A facet type\n"
        "that is not articulated in the idea is simply omitted.\n\n"
        "Idea:\n{idea_text}\n\n"
        'Return JSON: {{"segments": [{{"facet_type": "problem|contribution|evaluation",'
        ' "text": "<verbatim span>"}}]}}. ' + _JSON_ONLY,
    ),
    "extract_facets": (
        "structured",
        "You extract {family} statements from a research paper.\n"
        "{family_hint}\n"
        "For each statement report the section it came from and the identifiers of any\n"
        "papers it cites (empty list if none). Quote or tightly condense the paper's own\n"
        "wording; do not invent content.\n\n"
        "Paper: {title} (id {paper_id})\n"
        "Text by section:\n{paper_text}\n\n"
        'Return JSON: {{"statements": [{{"statement": "...", "source_section": "...",'
        ' "citations": ["<paper id>", ...]}}]}}. ' + _JSON_ONLY,
    ),
    "classify_relevance": (
        "structured",
        "Categorize how relevant this paper is to the researcher's current idea.\n"
        "Categories: perfectly_relevant (directly about the same problem or approach),\n"
        "somewhat_relevant (overlapping area, different focus), complementary (useful\n"
        "background or adjacent methods), not_relevant.\n\n"
        "Idea:\n{idea_text}\n\n"
        "Paper: {title}\nAbstract: {abstract}\n\n"
        'Return JSON: {{"category": "<one of the four>"}}. ' + _JSON_ONLY,
    ),
    "cluster_facet": (
        "long_context",
        "Group papers by the similarity of their {facet_type} statements.\n"
        "Give each group a short descriptive label (a few words naming the kind of\n"
        "{facet_type} the members share). A paper may appear in more than one group.\n\n"
        "Statements by paper:\n{statements}\n\n"
        'Return JSON: {{"clusters": [{{"label": "...", "members": ["<paper id>", ...]}}]}}. '
        + _JSON_ONLY,
    ),
    "rank_clusters": (
        "structured",
        "A researcher is working on the {facet_type} part of their idea:\n{facet_text}\n\n"
        "Cluster names:\n{cluster_labels}\n\n"
        "Identify which clusters would be most useful to consult for this facet.\n"
        'Return JSON: {{"starred": ["<cluster name>", ...]}}. ' + _JSON_ONLY,
    ),
    "build_graph": (
        "reasoning",
        "Below are contribution statements and limitation/future-work statements\n"
        "extracted from prior papers, each with a node id. Decide which contributions\n"
        "ADDRESS which limitations: an edge means the contribution substantially\n"
        "resolves or mitigates the limitation.\n\n"
        "Contributions:\n{contributions}\n\n"
        "Limitations and future work:\n{limitations}\n\n"
        'Return JSON: {{"edges": [{{"contribution": "<node id>", "limitation": "<node id>"}}]}}. '
        + _JSON_ONLY,
    ),
    "link_contribution": (
        "reasoning",
        "A researcher proposes this contribution:\n{proposed_contribution}\n\n"
        "Known limitations and future-work statements from prior papers:\n{limitations}\n\n"
        "Identify which of these the proposal directly addresses, with a one-sentence\n"
        "rationale per link. Link only genuine matches; an empty list is fine.\n"
        'Return JSON: {{"links": [{{"limitation": "<node id>", "rationale": "..."}}]}}. '
        + _JSON_ONLY,
    ),
    "problem_checker": (
        "reasoning",
        "Assess the problem statement of a research idea against prior work.\n"
        "A strong problem statement is grounded in citable prior work, establishes the\n"
        "problem is real (prevalence, failures, gaps, or stakeholder pain points), and\n"
        "argues why it matters (impact, risks, or opportunity). Check whether the draft\n"
        "can cite at least one matching problem statement from the papers below.\n\n"
        "Draft problem statement:\n{facet_text}\n\n"
        "Problem statements from selected papers:\n{problem_statements}\n\n"
        "Selected papers:\n{paper_digest}\n{steering}\n"
        "Findings must quote evidence VERBATIM from the papers (evidence_snippet must be\n"
        "an exact substring of the paper's stored text). Then propose a rewrite that\n"
        "states (1) the problem, (2) evidence it is real, (3) why it matters.\n"
        'Return JSON: {{"findings": [{{"claim": "...", "evidence_snippet": "...",'
        ' "paper_id": "...", "section": "..."}}], "verdict_summary": "...",'
        ' "suggested_rewrite": "...", "rewrite_elements": {{"problem_stated": true,'
        ' "evidence_cited": true, "significance_argued": true}}}}. ' + _JSON_ONLY,
    ),
    "contribution_checker": (
        "reasoning",
        "Assess the proposed contribution of a research idea against prior work.\n"
        "The proposal was linked to prior limitations with this verdict:\n"
        "{novelty_verdict}\nLinked limitations:\n{linked_limitations}\n\n"
        "Proposed contribution:\n{facet_text}\n\n"
        "Stated problem (for alignment):\n{problem_text}\n\n"
        "Contribution statements from selected papers:\n{contribution_statements}\n\n"
        "Selected papers:\n{paper_digest}\n{steering}\n"
        "Judge: (1) does it directly address the stated problem, (2) is success\n"
        "plausible given the methods and constraints, (3) how is it positioned relative\n"
        "to the linked limitations and future work? Findings must quote evidence\n"
        "VERBATIM from the papers. Then propose a rewrite meeting all three criteria.\n"
        'Return JSON: {{"findings": [{{"claim": "...", "evidence_snippet": "...",'
        ' "paper_id": "...", "section": "..."}}], "verdict_summary": "...",'
        ' "suggested_rewrite": "...", "rewrite_elements": {{"addresses_problem": true,'
        ' "plausible": true, "positioned_against_limitations": true}}}}. ' + _JSON_ONLY,
    ),
    "evaluation_checker": (
        "reasoning",
        "Assess the evaluation plan of a research idea against prior work.\n"
        "A strong evaluation shows the contribution addresses the problem, answers the\n"
        "research questions, and is plausible given how similar contributions are\n"
        "evaluated in prior work. Prior methods may be suboptimal; surface the patterns\n"
        "for the researcher to review rather than silently adopting or discarding them.\n\n"
        "Draft evaluation:\n{facet_text}\n\n"
        "Stated problem:\n{problem_text}\n\n"
        "Proposed contribution:\n{contribution_text}\n\n"
        "How selected papers evaluate similar work:\n{evaluation_statements}\n\n"
        "Selected papers:\n{paper_digest}\n{steering}\n"
        "Findings must quote evidence VERBATIM from the papers. Then propose a rewrite\n"
        "stating (1) whether the evaluation shows the contribution addresses the\n"
        "problem, and (2) whether the plan is feasible and sensitive enough to detect\n"
        "the intended effects.\n"
        'Return JSON: {{"findings": [{{"claim": "...", "evidence_snippet": "...",'
        ' "paper_id": "...", "section": "..."}}], "verdict_summary": "...",'
        ' "suggested_rewrite": "...", "rewrite_elements": {{"demonstrates_alignment": true,'
        ' "feasible_and_sensitive": true}}}}. ' + _JSON_ONLY,
    ),
    "affected_facets": (
        "structured",
        "One facet of a research idea was just revised. Identify which OTHER facet\n"
        "segments now need revision to keep the idea internally consistent (for\n"
        "example, a revised contribution may no longer address the original problem or\n"
        "may require different evaluation metrics). Do not include the edited segment.\n\n"
        "Revised idea:\n{idea_text}\n\n"
        "Segments:\n{segments}\n\n"
        "Edited segment: {edited_segment_id}\nNew text:\n{edited_text}\n\n"
        "Literature analysis:\n{analysis}\n\n"
        'Return JSON: {{"affected": ["<segment id>", ...]}}. ' + _JSON_ONLY,
    ),
}


def template_ids() -> list[str]:
    return sorted(TEMPLATES)


def task_class_for(template_id: str) -> str:
    return TEMPLATES[template_id][0]


def placeholders(template_id: str) -> set[str]:
    _, text = TEMPLATES[template_id]
    return {name for _, name, _, _ in Formatter().parse(text) if name}


def render(template_id: str, variables: dict) -> str:
    _, text = TEMPLATES[template_id]
    return text.format(**variables)
