import json
import random

import pytest

from litloop.backends import BackendError, InMemoryBackend
from litloop.corpus import (
    CorpusBuilder,
    CorpusLoadError,
    CorpusStore,
    FetchStatus,
    Provenance,
    Relevance,
    RetrievalError,
    UnknownPaperError,
    UnresolvablePaperError,
    cited_ids_in_facets,
    load,
    persist,
)
from tests.support import make_paper, make_statements, make_store

IDEA = (
    "Verifying biomedical claims is difficult, especially when you have to look "
    "through a paper's citations to get to the primary evidence."
)


def fixture_backend() -> InMemoryBackend:
    return InMemoryBackend(
        papers={
            "P1": {
                "title": "Claim Verification at Scale",
                "abstract": "We verify claims.",
                "sections": {
                    "introduction": "Claims need verification.",
                    "discussion": "Citation chains are long.",
                },
            },
            "P2": {"title": "Citation Graphs", "abstract": "We study citation graphs."},
            "P3": {"title": "Evidence Retrieval", "abstract": ""},
            "X1": {"title": "Prior Dataset", "abstract": "A dataset."},
            "X2": {"title": "Hop Analysis", "abstract": "Hops."},
            "X3": {"title": "Weak Supervision", "abstract": ""},
            "X4": {"title": "Graph Walks", "abstract": "Walks."},
            "X5": {"title": "Old Benchmark", "abstract": "Bench."},
        },
        searches={IDEA: ["P1", "P2", "P2", "P3"]},
        unresolvable={"GONE"},
    )


class FailingSearchBackend:
    def search(self, query, limit):
        raise BackendError("search endpoint down")

    def metadata(self, paper_id):
        return None

    def fulltext(self, paper_id):
        return None


# -- seed retrieval -----------------------------------------------------------


def test_retrieve_seed_dedupes_and_stamps_provenance():
    backend = fixture_backend()
    store = CorpusStore()
    ids = CorpusBuilder(backend).retrieve_seed(store, IDEA)
    assert ids == ["P1", "P2", "P3"]
    assert all(store.get(i).provenance is Provenance.SEED_RETRIEVAL for i in ids)
    assert store.get("P1").title == "Claim Verification at Scale"


def test_retrieve_seed_twice_is_identical():
    backend = fixture_backend()
    store = CorpusStore()
    builder = CorpusBuilder(backend)
    first = builder.retrieve_seed(store, IDEA)
    second = builder.retrieve_seed(store, IDEA)
    assert first == second
    assert len(store) == 3


def test_retrieve_seed_honors_cap():
    store = CorpusStore()
    ids = CorpusBuilder(fixture_backend(), seed_cap=2).retrieve_seed(store, IDEA)
    assert ids == ["P1", "P2"]


def test_retrieve_seed_rejects_empty_idea():
    with pytest.raises(ValueError):
        CorpusBuilder(fixture_backend()).retrieve_seed(CorpusStore(), "   ")


def test_retrieve_seed_no_hits_is_empty_not_error():
    store = CorpusStore()
    ids = CorpusBuilder(fixture_backend()).retrieve_seed(store, "something unheard of")
    assert ids == []
    assert len(store) == 0


def test_retrieve_seed_backend_failure_leaves_corpus_unchanged():
    store = CorpusStore()
    with pytest.raises(RetrievalError):
        CorpusBuilder(FailingSearchBackend()).retrieve_seed(store, IDEA)
    assert len(store) == 0


# -- full-text fetch ------------------------------------------------------------


def test_fetch_fulltext_populates_sections():
    backend = fixture_backend()
    store = CorpusStore()
    builder = CorpusBuilder(backend)
    builder.retrieve_seed(store, IDEA)
    record = builder.fetch_fulltext(store, "P1")
    assert record.fetch_status is FetchStatus.FULL_TEXT
    assert len(record.sections) >= 1


def test_fetch_degrades_to_abstract_only():
    backend = fixture_backend()
    store = CorpusStore()
    builder = CorpusBuilder(backend)
    builder.retrieve_seed(store, IDEA)
    record = builder.fetch_fulltext(store, "P2")
    assert record.fetch_status is FetchStatus.ABSTRACT_ONLY
    assert record.fetch_note
    assert record.sections == {}


def test_fetch_degrades_to_metadata_only_without_abstract():
    backend = fixture_backend()
    store = CorpusStore()
    builder = CorpusBuilder(backend)
    builder.retrieve_seed(store, IDEA)
    record = builder.fetch_fulltext(store, "P3")
    assert record.fetch_status is FetchStatus.METADATA_ONLY
    assert record.fetch_note


def test_fetch_unknown_paper_rejected():
    with pytest.raises(UnknownPaperError):
        CorpusBuilder(fixture_backend()).fetch_fulltext(CorpusStore(), "P1")


def test_fetch_backend_error_degrades_not_fails():
    backend = fixture_backend()
    backend.errors = {"P1"}
    store = CorpusStore()
    builder = CorpusBuilder(backend)
    builder.retrieve_seed(store, IDEA)
    record = builder.fetch_fulltext(store, "P1")
    assert record.fetch_status is FetchStatus.ABSTRACT_ONLY
    assert "failed" in record.fetch_note


def test_second_fetch_hits_cache_with_zero_backend_calls(tmp_path):
    cache_dir = tmp_path / "cache"
    first_backend = fixture_backend()
    store = CorpusStore()
    builder = CorpusBuilder(first_backend, cache_dir=cache_dir)
    builder.retrieve_seed(store, IDEA)
    builder.fetch_fulltext(store, "P1")

    second_backend = fixture_backend()
    fresh_store = make_store(make_paper("P1"))
    fresh_store.get("P1").abstract = ""
    cached_builder = CorpusBuilder(second_backend, cache_dir=cache_dir)
    record = cached_builder.fetch_fulltext(fresh_store, "P1")
    assert second_backend.total_calls == 0
    assert record.fetch_status is FetchStatus.FULL_TEXT
    assert record.sections["discussion"] == "Citation chains are long."


# -- citation expansion -----------------------------------------------------------


def expansion_fixture() -> CorpusStore:
    return make_store(
        make_paper(
            "P1",
            problems=[("Claims are hard to verify.", "introduction", ["X1"])],
            limitations=[("Single-hop only.", "discussion", ["X2", "GONE"])],
        ),
        make_paper("P2", contributions=[("A hop dataset.", "abstract", ["X3", "X1"])]),
        make_paper("P3", future_work=[("Extend to full graphs.", "conclusion", ["X4"])]),
        make_paper("P4", methods=[("Random walks.", "methods", ["X5"])]),
    )


def test_expand_citations_matches_scan_and_subtract_oracle():
    store = expansion_fixture()
    before_ids = set(store.ids())
    all_cited = set(cited_ids_in_facets(store))
    assert all_cited == {"X1", "X2", "X3", "X4", "X5", "GONE"}

    CorpusBuilder(fixture_backend()).expand_citations(store)

    added = set(store.ids()) - before_ids
    failed = {f.cited_id for f in store.expansion_failures}
    # Oracle: scan all facet statements for citation ids, subtract what the
    # corpus already had; expansion must account for exactly that set.
    expected_new = all_cited - before_ids
    assert added | failed == expected_new
    assert added == {"X1", "X2", "X3", "X4", "X5"}
    assert failed == {"GONE"}
    assert all(
        store.get(i).provenance is Provenance.CITATION_EXPANSION for i in added
    )


def test_expand_citations_noop_when_closure_holds():
    store = make_store(
        make_paper("P1", problems=[("Known problem.", "intro", ["P2"])]),
        make_paper("P2"),
    )
    CorpusBuilder(fixture_backend()).expand_citations(store)
    assert store.ids() == ["P1", "P2"]
    assert store.expansion_failures == []


def test_expand_citations_continues_past_backend_errors():
    backend = fixture_backend()
    backend.errors = {"X3"}
    store = expansion_fixture()
    CorpusBuilder(backend).expand_citations(store)
    assert "X3" not in store
    reasons = {f.cited_id: f.reason for f in store.expansion_failures}
    assert "backend error" in reasons["X3"]
    assert "X4" in store


def test_expand_citations_is_one_hop_and_idempotent():
    backend = fixture_backend()
    store = expansion_fixture()
    builder = CorpusBuilder(backend)
    builder.expand_citations(store)
    size, failures = len(store), len(store.expansion_failures)
    builder.expand_citations(store)
    assert (len(store), len(store.expansion_failures)) == (size, failures)


def test_expansion_closure_property_random_corpora():
    rng = random.Random(7)
    universe = [f"U{i}" for i in range(30)]
    backend = InMemoryBackend(
        papers={u: {"title": u, "abstract": ""} for u in universe[:20]},
        unresolvable=set(universe[20:]),
    )
    for _ in range(50):
        store = CorpusStore()
        for p in range(rng.randint(1, 5)):
            citations = rng.sample(universe, rng.randint(0, 4))
            store.add(
                make_paper(f"S{p}", problems=[("stmt", "intro", citations)])
            )
        CorpusBuilder(backend).expand_citations(store)
        cited = set(cited_ids_in_facets(store))
        covered = set(store.ids()) | {f.cited_id for f in store.expansion_failures}
        assert cited <= covered


# -- user additions ---------------------------------------------------------------


def test_add_paper_new_id():
    store = CorpusStore()
    record, added = CorpusBuilder(fixture_backend()).add_paper(store, "X1")
    assert added is True
    assert record.provenance is Provenance.USER_ADDED
    assert len(store) == 1


def test_add_paper_duplicate_is_noop_and_keeps_provenance():
    store = make_store(make_paper("P1"))
    record, added = CorpusBuilder(fixture_backend()).add_paper(store, "P1")
    assert added is False
    assert record.provenance is Provenance.SEED_RETRIEVAL
    assert len(store) == 1


def test_add_paper_unresolvable_rejected():
    with pytest.raises(UnresolvablePaperError):
        CorpusBuilder(fixture_backend()).add_paper(CorpusStore(), "GONE")


# -- persistence -------------------------------------------------------------------


def test_persist_load_round_trip_empty(tmp_path):
    store = CorpusStore()
    persist(store, tmp_path / "corpus")
    loaded = load(tmp_path / "corpus")
    assert loaded.to_dict() == store.to_dict()


def test_persist_load_round_trip_deep_equal(tmp_path):
    store = expansion_fixture()
    CorpusBuilder(fixture_backend()).expand_citations(store)
    for i, paper_id in enumerate(store.ids()[:4]):
        store.get(paper_id).relevance = list(Relevance)[i % 4]
    store.get("P1").sections = {"intro": "Full text here."}
    store.get("P1").fetch_status = FetchStatus.FULL_TEXT
    store.get("P1").extraction_versions["problems"] = "p1"
    assert len(store) == 9

    persist(store, tmp_path / "corpus")
    loaded = load(tmp_path / "corpus")
    # Field-wise equality through the dict form, which covers every field.
    assert loaded.to_dict() == store.to_dict()
    assert loaded.ids() == store.ids()


def test_add_paper_round_trips_identically(tmp_path):
    store = CorpusStore()
    CorpusBuilder(fixture_backend()).add_paper(store, "X1")
    persist(store, tmp_path / "corpus")
    loaded = load(tmp_path / "corpus")
    assert loaded.get("X1").to_dict() == store.get("X1").to_dict()


def test_load_corrupt_paper_file_names_file_and_position(tmp_path):
    store = make_store(make_paper("P1"))
    persist(store, tmp_path / "corpus")
    manifest = json.loads((tmp_path / "corpus" / "manifest.json").read_text())
    victim = tmp_path / "corpus" / "papers" / manifest["papers"]["P1"]
    victim.write_text(victim.read_text()[:25])
    with pytest.raises(CorpusLoadError) as exc:
        load(tmp_path / "corpus")
    message = str(exc.value)
    assert "P1" in message and "line" in message


def test_load_truncated_manifest_names_parse_position(tmp_path):
    store = make_store(make_paper("P1"))
    persist(store, tmp_path / "corpus")
    manifest_path = tmp_path / "corpus" / "manifest.json"
    manifest_path.write_text(manifest_path.read_text()[:-8])
    with pytest.raises(CorpusLoadError, match="line"):
        load(tmp_path / "corpus")


def test_load_missing_paper_file_named(tmp_path):
    store = make_store(make_paper("P1"), make_paper("P2"))
    persist(store, tmp_path / "corpus")
    manifest = json.loads((tmp_path / "corpus" / "manifest.json").read_text())
    (tmp_path / "corpus" / "papers" / manifest["papers"]["P2"]).unlink()
    with pytest.raises(CorpusLoadError, match="P2"):
        load(tmp_path / "corpus")


def test_load_record_missing_field_named(tmp_path):
    store = make_store(make_paper("P1"))
    persist(store, tmp_path / "corpus")
    manifest = json.loads((tmp_path / "corpus" / "manifest.json").read_text())
    victim = tmp_path / "corpus" / "papers" / manifest["papers"]["P1"]
    data = json.loads(victim.read_text())
    del data["sections"]
    victim.write_text(json.dumps(data))
    with pytest.raises(CorpusLoadError, match="P1"):
        load(tmp_path / "corpus")


def test_stored_texts_covers_title_abstract_sections():
    paper = make_paper("P1")
    paper.sections = {"intro": "Hello.", "methods": "World."}
    texts = paper.stored_texts()
    assert set(texts) == {"title", "abstract", "intro", "methods"}


def test_make_statements_helper_round_trip():
    statements = make_statements(
        problems=[("a", "intro", ["X"])], future_work=[("b", "end", [])]
    )
    clone = type(statements).from_dict(statements.to_dict())
    assert clone == statements
