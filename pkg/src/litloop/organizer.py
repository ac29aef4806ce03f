"""Relevance classification, corpus ordering, facet clustering, and starring.

Ordering is a pure three-key sort (relevance category, provenance, paper id).
Clustering sends one long-context task per facet family and then normalizes
the reply: unknown members are dropped, labels are deduplicated and capped,
and papers the model omitted land in a synthetic "uncategorized" cluster so
coverage is total.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .corpus import CorpusStore, PaperRecord, Provenance, Relevance
from .document import FacetType
from .facets import CORE_FAMILY
from .gateway import Gateway, RetryExhaustedError, TaskRequest

log = logging.getLogger(__name__)

CATEGORY_RANK = {
    Relevance.PERFECTLY_RELEVANT: 0,
    Relevance.SOMEWHAT_RELEVANT: 1,
    Relevance.COMPLEMENTARY: 2,
    Relevance.NOT_RELEVANT: 3,
}

PROVENANCE_RANK = {
    Provenance.SEED_RETRIEVAL: 0,
    Provenance.CITATION_EXPANSION: 1,
    Provenance.USER_ADDED: 2,
}

MAX_LABEL_CHARS = 60
UNCATEGORIZED_LABEL = "uncategorized"


class ClusteringError(Exception):
    """Clustering failed for one facet; any previous clustering should be kept."""


@dataclass
class FacetCluster:
    cluster_id: str
    facet_type: FacetType
    label: str
    members: tuple[str, ...]
    starred: bool = False

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "facet_type": self.facet_type.value,
            "label": self.label,
            "members": sorted(self.members),
            "starred": self.starred,
        }

    @staticmethod
    def from_dict(data: dict) -> "FacetCluster":
        return FacetCluster(
            cluster_id=data["cluster_id"],
            facet_type=FacetType(data["facet_type"]),
            label=data["label"],
            members=tuple(data["members"]),
            starred=data["starred"],
        )


@dataclass
class RelevanceRanking:
    ordered: list[str] = field(default_factory=list)
    categories: dict[str, Relevance] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ordered": list(self.ordered),
            "categories": {pid: c.value for pid, c in self.categories.items()},
        }

    @staticmethod
    def from_dict(data: dict) -> "RelevanceRanking":
        return RelevanceRanking(
            ordered=list(data["ordered"]),
            categories={pid: Relevance(c) for pid, c in data["categories"].items()},
        )


@dataclass
class RerankResult:
    ranking: RelevanceRanking
    clusterings: dict[FacetType, list[FacetCluster]]
    errors: list[str] = field(default_factory=list)


# -- relevance ----------------------------------------------------------------


def classify_relevance(
    paper: PaperRecord, idea_text: str, gateway: Gateway
) -> Relevance | None:
    """Classify one paper against the idea and store the category.

    Retry exhaustion leaves the category unset; the paper is then excluded
    from ranked views until a later classification succeeds.
    """
    if not paper.abstract and paper.facets.is_empty() and not paper.sections:
        log.warning("paper %s has nothing to classify from", paper.paper_id)
        return paper.relevance
    request = TaskRequest.for_template(
        "classify_relevance",
        {
            "idea_text": idea_text,
            "title": paper.title,
            "abstract": paper.abstract or "(no abstract)",
        },
    )
    try:
        response = gateway.execute(request)
    except RetryExhaustedError as exc:
        log.warning("relevance classification failed for %s: %s", paper.paper_id, exc)
        return paper.relevance
    paper.relevance = Relevance(response.parsed["category"])
    return paper.relevance


def order_corpus(store: CorpusStore) -> RelevanceRanking:
    """Deterministic total order: category rank, then provenance, then id.

    Papers without a category are excluded; insertion order never matters.
    """
    classified = [p for p in store.papers.values() if p.relevance is not None]
    classified.sort(
        key=lambda p: (
            CATEGORY_RANK[p.relevance],
            PROVENANCE_RANK[p.provenance],
            p.paper_id,
        )
    )
    return RelevanceRanking(
        ordered=[p.paper_id for p in classified],
        categories={p.paper_id: p.relevance for p in classified},
    )


# -- clustering -----------------------------------------------------------------


def papers_with_family(store: CorpusStore, facet_type: FacetType) -> list[str]:
    family = CORE_FAMILY[facet_type]
    return [
        paper_id
        for paper_id, paper in store.papers.items()
        if paper.facets.family(family)
    ]


def _statements_blob(store: CorpusStore, facet_type: FacetType, eligible: list[str]) -> str:
    family = CORE_FAMILY[facet_type]
    lines = []
    for paper_id in eligible:
        for statement in store.get(paper_id).facets.family(family):
            lines.append(f"{paper_id}: {statement.statement}")
    return "\n".join(lines)


def _normalize_label(label: str) -> str:
    label = " ".join(label.split())
    if len(label) > MAX_LABEL_CHARS:
        label = label[: MAX_LABEL_CHARS - 1].rstrip() + "…"
    return label or "unlabeled"


def cluster_by_facet(
    store: CorpusStore, facet_type: FacetType, gateway: Gateway
) -> list[FacetCluster]:
    """Cluster all papers holding statements of one facet family.

    Every eligible paper ends up in at least one cluster; the model's
    omissions are collected into an "uncategorized" cluster.
    """
    eligible = papers_with_family(store, facet_type)
    if not eligible:
        return []
    request = TaskRequest.for_template(
        "cluster_facet",
        {
            "facet_type": facet_type.value,
            "statements": _statements_blob(store, facet_type, eligible),
        },
    )
    try:
        response = gateway.execute(request)
    except RetryExhaustedError as exc:
        raise ClusteringError(f"clustering failed for {facet_type.value}: {exc}") from exc

    eligible_set = set(eligible)
    clusters: list[FacetCluster] = []
    seen_labels: dict[str, int] = {}
    covered: set[str] = set()
    for entry in response.parsed["clusters"]:
        members = []
        for member in entry["members"]:
            if member in eligible_set:
                if member not in members:
                    members.append(member)
            else:
                log.warning(
                    "cluster member %r is not an eligible paper, dropped", member
                )
        if not members:
            continue
        label = _normalize_label(entry["label"])
        seen_labels[label] = seen_labels.get(label, 0) + 1
        if seen_labels[label] > 1:
            label = f"{label} ({seen_labels[label]})"
        covered.update(members)
        clusters.append(
            FacetCluster(
                cluster_id=f"{facet_type.value}-{len(clusters) + 1}",
                facet_type=facet_type,
                label=label,
                members=tuple(members),
            )
        )
    omitted = [paper_id for paper_id in eligible if paper_id not in covered]
    if omitted:
        clusters.append(
            FacetCluster(
                cluster_id=f"{facet_type.value}-{len(clusters) + 1}",
                facet_type=facet_type,
                label=UNCATEGORIZED_LABEL,
                members=tuple(omitted),
            )
        )
    return clusters


def rank_clusters(
    facet_text: str, clusters: list[FacetCluster], gateway: Gateway
) -> list[str]:
    """Star the clusters most useful to the active facet.

    Returns the starred cluster ids (always a non-empty subset) and updates
    the ``starred`` flag on the given clusters in place. Unknown cluster names
    in the reply are dropped; if nothing valid remains, the largest cluster is
    starred as a fallback.
    """
    if not clusters:
        raise ValueError("rank_clusters requires at least one cluster")
    request = TaskRequest.for_template(
        "rank_clusters",
        {
            "facet_type": clusters[0].facet_type.value,
            "facet_text": facet_text,
            "cluster_labels": "\n".join(f"- {c.label}" for c in clusters),
        },
    )
    response = gateway.execute(request)
    by_label = {c.label: c.cluster_id for c in clusters}
    starred_ids: list[str] = []
    for name in response.parsed["starred"]:
        cluster_id = by_label.get(name.strip())
        if cluster_id is None:
            log.warning("starred cluster name %r does not exist, dropped", name)
        elif cluster_id not in starred_ids:
            starred_ids.append(cluster_id)
    if not starred_ids:
        # Deterministic fallback: most members, ties broken by cluster id.
        fallback = sorted(clusters, key=lambda c: (-len(c.members), c.cluster_id))[0]
        starred_ids = [fallback.cluster_id]
        log.warning("no valid starred names; falling back to %s", fallback.cluster_id)
    for cluster in clusters:
        cluster.starred = cluster.cluster_id in starred_ids
    return starred_ids


def rerank(store: CorpusStore, idea_text: str, gateway: Gateway) -> RerankResult:
    """User-initiated refresh: re-classify relevance and rebuild all clusterings.

    Partial failures keep whatever succeeded; each failure is reported as its
    own entry.
    """
    errors: list[str] = []
    for paper in store.papers.values():
        before = paper.relevance
        after = classify_relevance(paper, idea_text, gateway)
        if after is None and before is None:
            errors.append(f"relevance: {paper.paper_id} left unclassified")
    ranking = order_corpus(store)
    clusterings: dict[FacetType, list[FacetCluster]] = {}
    for facet_type in FacetType:
        try:
            clusterings[facet_type] = cluster_by_facet(store, facet_type, gateway)
        except ClusteringError as exc:
            errors.append(str(exc))
    return RerankResult(ranking=ranking, clusterings=clusterings, errors=errors)
