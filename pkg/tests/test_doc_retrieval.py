import random

import pytest

from dialcheck.corpus import Document, build_index
from dialcheck.doc_retrieval import (
    ZERO_OVERLAP_EPSILON,
    Conversation,
    average_retrieved,
    retrieve_documents,
)
from dialcheck.errors import EmptyClaim
from dialcheck.scorers import BM25Scorer


def retrieve_oracle(conv, scorer, k, corpus_size):
    """Brute-force reimplementation: score all docs per query, union, rescore, sort."""
    candidates = {d for d, _ in scorer.score_query(conv.claim, k)}
    for utt in conv.context:
        hits = scorer.score_query(utt, corpus_size)
        if hits:
            candidates.add(hits[0][0])
    claim_scores = dict(scorer.score_query(conv.claim, corpus_size))
    present = {d: claim_scores[d] for d in candidates if d in claim_scores}
    floor = min(present.values()) if present else 0.0
    final = {d: present.get(d, floor - ZERO_OVERLAP_EPSILON) for d in candidates}
    return sorted(final.items(), key=lambda kv: (-kv[1], kv[0]))


@pytest.fixture
def five_docs_index():
    docs = [
        Document("d1", "Alpha Bird", ("The alpha bird flies south in winter.",)),
        Document("d2", "Beta Fish", ("A beta fish swims in warm water.",)),
        Document("d3", "Gamma Wolf", ("The gamma wolf hunts at night.",)),
        Document("d4", "Delta Horse", ("A delta horse runs across the plains.",)),
        Document("d5", "Epsilon Cat", ("The epsilon cat sleeps all day.",)),
    ]
    return docs, build_index(docs)


class TestRetrieveDocuments:
    def test_empty_context_is_claim_topk(self, paul_index):
        scorer = BM25Scorer(paul_index)
        conv = Conversation((), "Paul was born in 1942")
        result = retrieve_documents(conv, scorer, k=2)
        expected = scorer.score_query(conv.claim, 2)
        assert [(e.doc_id, e.score) for e in result] == expected
        assert all(e.source == "claim" for e in result)

    def test_context_rescues_coreference(self, paul_index):
        # an ambiguous "Paul" claim ranks other Pauls above "mccartney";
        # the context utterance brings the right document into the union
        scorer = BM25Scorer(paul_index)
        claim = "Paul was born a long time ago."
        claim_only = [d for d, _ in scorer.score_query(claim, 2)]
        assert "mccartney" not in claim_only
        conv = Conversation(("I love the Beatles, especially Paul McCartney.",), claim)
        result = retrieve_documents(conv, scorer, k=2)
        assert "mccartney" in result.doc_ids()
        ctx_entry = next(e for e in result if e.doc_id == "mccartney")
        assert ctx_entry.source == "context:1"

    def test_ranks_contiguous_scores_descending(self, paul_index):
        scorer = BM25Scorer(paul_index)
        conv = Conversation(("Pope Paul I lived long ago.",), "Paul was born in 1942.")
        result = retrieve_documents(conv, scorer, k=2)
        assert [e.rank for e in result] == list(range(1, len(result) + 1))
        scores = [e.score for e in result]
        assert scores == sorted(scores, reverse=True)

    def test_matches_brute_force_oracle(self, five_docs_index):
        docs, index = five_docs_index
        scorer = BM25Scorer(index)
        conv = Conversation(
            ("the alpha bird is lovely", "what about the gamma wolf"),
            "it hunts at night in winter",
        )
        result = retrieve_documents(conv, scorer, k=3)
        expected = retrieve_oracle(conv, scorer, 3, len(docs))
        assert [(e.doc_id, e.score) for e in result] == expected

    def test_zero_overlap_context_doc_ranks_last(self, five_docs_index):
        docs, index = five_docs_index
        scorer = BM25Scorer(index)
        conv = Conversation(("the epsilon cat sleeps",), "alpha bird flies south")
        result = retrieve_documents(conv, scorer, k=2)
        last = result.entries[-1]
        assert last.doc_id == "d5"
        assert last.source == "context:1"
        others = [e.score for e in result.entries[:-1]]
        assert last.score == pytest.approx(min(others) - ZERO_OVERLAP_EPSILON)

    def test_empty_claim_rejected(self):
        with pytest.raises(EmptyClaim):
            Conversation((), "   ")

    def test_filler_utterance_skipped(self, paul_index):
        scorer = BM25Scorer(paul_index)
        with_filler = retrieve_documents(
            Conversation(("...!?.",), "Paul was born in 1942."), scorer, k=2
        )
        without = retrieve_documents(
            Conversation((), "Paul was born in 1942."), scorer, k=2
        )
        assert with_filler.doc_ids() == without.doc_ids()

    def test_superset_property(self, five_docs_index):
        docs, index = five_docs_index
        scorer = BM25Scorer(index)
        rng = random.Random(7)
        words = ["alpha", "bird", "beta", "fish", "wolf", "horse", "cat", "winter", "night"]
        for _ in range(50):
            claim = " ".join(rng.choices(words, k=3))
            context = tuple(
                " ".join(rng.choices(words, k=3)) for _ in range(rng.randint(0, 3))
            )
            k = rng.randint(1, 4)
            conv = Conversation(context, claim)
            claim_only = {d for d, _ in scorer.score_query(claim, k)}
            union = set(retrieve_documents(conv, scorer, k).doc_ids())
            assert claim_only <= union
            assert len(union) <= k + len(context)

    def test_context_permutation_invariant_entries(self, five_docs_index):
        docs, index = five_docs_index
        scorer = BM25Scorer(index)
        ctx = ("the alpha bird is lovely", "what about the gamma wolf", "beta fish swims")
        a = retrieve_documents(Conversation(ctx, "it hunts at night"), scorer, k=2)
        b = retrieve_documents(Conversation(ctx[::-1], "it hunts at night"), scorer, k=2)
        assert [(e.doc_id, e.score, e.rank) for e in a] == \
               [(e.doc_id, e.score, e.rank) for e in b]


class TestAverageRetrieved:
    def test_all_empty_context(self, five_docs_index):
        docs, index = five_docs_index
        scorer = BM25Scorer(index)
        convs = [
            Conversation((), "alpha bird beta fish gamma wolf"),
            Conversation((), "delta horse epsilon cat alpha bird"),
        ]
        assert average_retrieved(convs, scorer, k=3) == (3.0, 0.0)

    def test_context_doc_duplicating_claim_doc(self, five_docs_index):
        docs, index = five_docs_index
        scorer = BM25Scorer(index)
        convs = [Conversation(("the alpha bird flies",), "alpha bird beta fish wolf")]
        mean_docs, mean_ctx = average_retrieved(convs, scorer, k=3)
        assert mean_docs == 3.0
        assert mean_ctx == 0.0

    def test_hand_counted_fixture(self, five_docs_index):
        docs, index = five_docs_index
        scorer = BM25Scorer(index)
        convs = [
            # claim hits d3 only; context adds d1 -> 2 docs, 1 context-sourced
            Conversation(("the alpha bird flies south",), "gamma wolf hunts"),
            # claim hits d2 only; no context
            Conversation((), "beta fish swims"),
        ]
        mean_docs, mean_ctx = average_retrieved(convs, scorer, k=1)
        assert mean_docs == pytest.approx((2 + 1) / 2)
        assert mean_ctx == pytest.approx((1 + 0) / 2)

    def test_empty_list_rejected(self, five_docs_index):
        _, index = five_docs_index
        with pytest.raises(ValueError):
            average_retrieved([], BM25Scorer(index), k=1)
