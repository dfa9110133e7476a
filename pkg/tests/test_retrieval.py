"""Term index: weighting, ranking, determinism."""

import pytest

from specagent.model import SpecBundle
from specagent.retrieval import build_index, query, tool_scores, tools_for_hits
from specagent.textutil import tokenize


@pytest.fixture(scope="module")
def index(bundle):
    return build_index(bundle)


class TestBuildIndex:
    def test_empty_bundle_empty_postings(self):
        index = build_index(SpecBundle("d"))
        assert index.postings == {}
        assert index.doc_count == 0

    def test_maintenance_posting_hits_status_outputs(self, index):
        docs = index.postings["maintenance"]
        assert ("GetMachineStatus", "outputs") in docs
        assert docs[("GetMachineStatus", "outputs")] == 2.0

    def test_every_alias_token_has_weight_three_posting(self, bundle, index):
        for tool in bundle.tools:
            for param in tool.inputs:
                for alias in param.aliases:
                    for token in tokenize(alias):
                        docs = index.postings.get(token, {})
                        assert docs.get((tool.name, "inputs")) == 3.0, (tool.name, alias, token)

    def test_tool_name_words_weighted_three(self, index):
        assert index.postings["technician"][("GetTechnicianOnDuty", "name")] == 3.0
        assert index.postings["getmachinestatus"][("GetMachineStatus", "name")] == 3.0

    def test_stop_words_not_indexed(self, index):
        assert "the" not in index.postings
        assert "is" not in index.postings


class TestQuery:
    def test_maintenance_question_ranks_status_tool_first(self, index):
        hits = query(index, "is machine 7 under maintenance", k=3)
        assert hits[0].tool == "GetMachineStatus"

    def test_no_shared_terms_is_empty(self, index):
        assert query(index, "completely unrelated celestial phenomena", k=5) == []

    def test_casing_invariance(self, index):
        a = query(index, "MACHINE Failure RATE", k=5)
        b = query(index, "machine failure rate", k=5)
        assert [(h.tool, h.section, h.score) for h in a] == [(h.tool, h.section, h.score) for h in b]

    def test_k_larger_than_hits_returns_all(self, index):
        hits = query(index, "technician", k=50)
        assert 0 < len(hits) < 50

    def test_k_must_be_positive(self, index):
        with pytest.raises(ValueError):
            query(index, "machine", k=0)

    def test_repeated_queries_identical(self, index):
        runs = [query(index, "why is machine 12 down", k=4) for _ in range(3)]
        as_tuples = [[(h.tool, h.section, h.score) for h in run] for run in runs]
        assert as_tuples[0] == as_tuples[1] == as_tuples[2]

    def test_soundness_hits_share_a_term(self, bundle, index):
        utterance = "show the failure rate for machine 42"
        terms = {t for t in tokenize(utterance) if t not in index.stop_words}
        for hit in query(index, utterance, k=10):
            posted = {term for term in terms if (hit.tool, hit.section) in index.postings.get(term, {})}
            assert posted, (hit.tool, hit.section)

    def test_score_is_sum_of_matched_term_weights(self, index):
        # hand-computed: "equipment" (alias, 3) + "highest" (pattern prose, 1)
        hits = query(index, "equipment highest", k=10)
        scores = {(h.tool, h.section): h.score for h in hits}
        assert scores[("GetFailureRate", "inputs")] == 3.0
        assert scores[("GetFailureRate", "slot_phrases")] == 1.0


class TestToolScores:
    def test_restriction_limits_tools(self, index):
        scores = tool_scores(index, "machine failure rate", restrict={"GetFailureRate"})
        assert set(scores) == {"GetFailureRate"}

    def test_term_contributes_strongest_weight_per_tool(self, index):
        # "downtime": name word of GetDowntimeReason (3) even though it is also prose there
        scores = tool_scores(index, "downtime")
        assert scores["GetDowntimeReason"] == 3.0

    def test_tools_for_hits_preserves_order(self, index):
        hits = query(index, "machine failure rate", k=6)
        tools = tools_for_hits(hits)
        assert len(tools) == len(set(tools))
        assert tools[0] == hits[0].tool
