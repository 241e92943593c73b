import math
import random

import numpy as np
import pytest

from dialcheck.corpus import SentenceId
from dialcheck.doc_retrieval import Conversation, retrieve_documents
from dialcheck.errors import DegenerateLabels, NonFiniteFeature
from dialcheck.evaluation import LabeledExample
from dialcheck.scorers import BM25Scorer, TfidfEncoder, cosine
from dialcheck.sent_retrieval import (
    EvidenceCandidate,
    FusionModel,
    FusionTrainingRecord,
    apply_fusion,
    build_training_records,
    logloss_gradient,
    regularized_logloss,
    score_sentences,
    select_top_evidence,
    train_fusion,
)


def irls_oracle(X, y, l2_lambda, iters=100):
    """Independent Newton (IRLS) solver for the same objective:

    mean log-loss + 0.5 * l2 * ||w[1:]||^2 over z-scored features,
    bias unregularized.
    """
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds < 1e-12] = 1.0
    Z = np.hstack([np.ones((len(X), 1)), (X - means) / stds])
    n = len(X)
    reg = l2_lambda * np.diag([0.0, 1.0, 1.0, 1.0])
    w = np.zeros(4)
    for _ in range(iters):
        p = 1.0 / (1.0 + np.exp(-(Z @ w)))
        grad = Z.T @ (p - y) / n + reg @ w
        W = p * (1 - p)
        H = (Z.T * W) @ Z / n + reg
        delta = np.linalg.solve(H, grad)
        w = w - delta
        if np.linalg.norm(delta) < 1e-12:
            break
    return w, means, stds


def random_records(rng, n=40):
    records = []
    for _ in range(n):
        r_s = rng.random()
        r_d = rng.gauss(0, 2)
        rank = float(rng.randint(1, 10))
        # label correlates with r_s and low rank
        logit = 3 * r_s - 0.3 * rank + rng.gauss(0, 0.5)
        records.append(FusionTrainingRecord((r_s, r_d, rank), logit > 0))
    if all(r.label for r in records):
        records[0] = FusionTrainingRecord(records[0].features, False)
    if not any(r.label for r in records):
        records[0] = FusionTrainingRecord(records[0].features, True)
    return records


def make_candidate(doc_id, sent_index, r_s, r_d, rank, text="t"):
    return EvidenceCandidate(SentenceId(doc_id, sent_index), text, r_s, r_d, rank)


class TestScoreSentences:
    def test_identical_sentence_top_rank(self, paul_index):
        scorer = BM25Scorer(paul_index)
        enc = TfidfEncoder(paul_index)
        claim = "James Paul McCartney was born in 1942."
        docs = retrieve_documents(Conversation((), claim), scorer, k=3)
        cands = score_sentences(claim, docs, paul_index, enc)
        assert cands[0].sentence_id == SentenceId("mccartney", 0)
        assert cands[0].sent_score == pytest.approx(1.0, abs=1e-9)

    def test_no_overlap_all_zero_tiebreak(self, paul_index):
        scorer = BM25Scorer(paul_index)
        enc = TfidfEncoder(paul_index)
        docs = retrieve_documents(Conversation((), "paul"), scorer, k=3)
        cands = score_sentences("xylophone quartet", docs, paul_index, enc)
        assert all(c.sent_score == 0.0 for c in cands)
        keys = [(c.doc_rank, c.sentence_id.sent_index) for c in cands]
        assert keys == sorted(keys)

    def test_matches_brute_force_cosines(self, paul_index):
        scorer = BM25Scorer(paul_index)
        enc = TfidfEncoder(paul_index)
        claim = "Paul was born in 1942."
        docs = retrieve_documents(Conversation((), claim), scorer, k=2)
        cands = score_sentences(claim, docs, paul_index, enc)
        claim_vec = enc.encode(claim)
        expected = {}
        for entry in docs:
            doc = paul_index.documents[entry.doc_id]
            for i, sent in enumerate(doc.sentences):
                expected[SentenceId(entry.doc_id, i)] = cosine(claim_vec, enc.encode(sent))
        assert len(cands) == len(expected)
        for c in cands:
            assert c.sent_score == pytest.approx(expected[c.sentence_id], abs=1e-12)
        scores = [c.sent_score for c in cands]
        assert scores == sorted(scores, reverse=True)


class TestBuildTrainingRecords:
    def _dataset(self, gold):
        conv = Conversation((), "Paul was born in 1942.")
        return [LabeledExample("e1", conv, "SUPPORTS", frozenset(gold))]

    def test_gold_doc_not_retrieved_all_false(self, paul_index):
        scorer = BM25Scorer(paul_index)
        enc = TfidfEncoder(paul_index)
        dataset = self._dataset([SentenceId("not-retrieved", 0)])
        records = build_training_records(dataset, paul_index, scorer, enc, k=2)
        assert records
        assert not any(r.label for r in records)

    def test_hand_enumeration(self, paul_index):
        scorer = BM25Scorer(paul_index)
        enc = TfidfEncoder(paul_index)
        gold = SentenceId("mccartney", 0)
        dataset = self._dataset([gold])
        records = build_training_records(dataset, paul_index, scorer, enc, k=3)
        docs = retrieve_documents(dataset[0].conversation, scorer, k=3)
        cands = score_sentences(dataset[0].conversation.claim, docs, paul_index, enc)
        assert len(records) == len(cands)
        assert sum(r.label for r in records) == 1
        for rec, cand in zip(records, cands):
            assert rec.features == (cand.sent_score, cand.doc_score, float(cand.doc_rank))
            assert rec.label == (cand.sentence_id == gold)

    def test_empty_dataset(self, paul_index):
        scorer = BM25Scorer(paul_index)
        enc = TfidfEncoder(paul_index)
        assert build_training_records([], paul_index, scorer, enc, k=2) == []


class TestTrainFusion:
    def test_degenerate_labels(self):
        records = [FusionTrainingRecord((0.1, 0.2, 1.0), True) for _ in range(5)]
        with pytest.raises(DegenerateLabels):
            train_fusion(records)

    def test_non_finite_feature(self):
        records = [
            FusionTrainingRecord((float("nan"), 0.0, 1.0), True),
            FusionTrainingRecord((0.5, 0.0, 2.0), False),
        ]
        with pytest.raises(NonFiniteFeature):
            train_fusion(records)

    def test_separable_on_rs_ranks_like_rs(self):
        rng = random.Random(3)
        records = [
            FusionTrainingRecord(
                (r_s := rng.random(), rng.gauss(0, 1), float(rng.randint(1, 10))),
                r_s > 0.5,
            )
            for _ in range(2000)
        ]
        model = train_fusion(records, max_iters=2000)
        # held-out points with r_s separated enough that noise weights
        # (driven to ~0 by training) cannot flip the ordering
        held_out = [
            (0.05 * i, rng.gauss(0, 1), float(rng.randint(1, 10)))
            for i in range(20)
        ]
        rng.shuffle(held_out)
        by_model = sorted(range(20), key=lambda i: -model.score(held_out[i]))
        by_rs = sorted(range(20), key=lambda i: -held_out[i][0])
        assert by_model == by_rs

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_matches_irls_oracle(self, seed):
        rng = random.Random(seed)
        records = random_records(rng, n=20)
        model = train_fusion(records, l2_lambda=1e-3, max_iters=5000, tol=1e-10)
        X = np.array([r.features for r in records])
        y = np.array([1.0 if r.label else 0.0 for r in records])
        w_star, means, stds = irls_oracle(X, y, l2_lambda=1e-3)
        assert np.allclose(model.means, means)
        assert np.allclose(model.stds, stds)
        assert np.max(np.abs(model.weights - w_star)) <= 1e-4

    def test_gradient_matches_finite_differences(self):
        rng = random.Random(11)
        records = random_records(rng, n=30)
        X = np.array([r.features for r in records])
        y = np.array([1.0 if r.label else 0.0 for r in records])
        means, stds = X.mean(axis=0), X.std(axis=0)
        stds[stds < 1e-12] = 1.0
        Z = (X - means) / stds
        sw = np.ones(len(y))
        h = 1e-5
        np_rng = np.random.default_rng(5)
        for _ in range(10):
            w = np_rng.normal(0, 1, size=4)
            grad = logloss_gradient(w, Z, y, 1e-3, sw)
            fd = np.zeros(4)
            for j in range(4):
                e = np.zeros(4)
                e[j] = h
                fd[j] = (
                    regularized_logloss(w + e, Z, y, 1e-3, sw)
                    - regularized_logloss(w - e, Z, y, 1e-3, sw)
                ) / (2 * h)
            assert np.linalg.norm(grad - fd) <= 1e-4 * max(np.linalg.norm(fd), 1.0)

    def test_loss_not_worse_than_zero_weights(self):
        rng = random.Random(21)
        records = random_records(rng, n=60)
        model = train_fusion(records)
        X = np.array([r.features for r in records])
        y = np.array([1.0 if r.label else 0.0 for r in records])
        Z = (X - model.means) / model.stds
        sw = np.ones(len(y))
        assert regularized_logloss(model.weights, Z, y, 1e-3, sw) <= \
            regularized_logloss(np.zeros(4), Z, y, 1e-3, sw)

    def test_deterministic_serialization(self, tmp_path):
        rng = random.Random(9)
        records = random_records(rng, n=50)
        m1 = train_fusion(records, seed=42)
        m2 = train_fusion(records, seed=42)
        p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
        m1.save(p1)
        m2.save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_model_round_trip(self, tmp_path):
        rng = random.Random(13)
        model = train_fusion(random_records(rng, n=30))
        path = tmp_path / "model.json"
        model.save(path)
        loaded = FusionModel.load(path)
        assert np.array_equal(loaded.weights, model.weights)
        assert np.array_equal(loaded.means, model.means)
        assert np.array_equal(loaded.stds, model.stds)
        assert loaded.trained_on == model.trained_on

    def test_degenerate_feature_std_clamped(self):
        records = [
            FusionTrainingRecord((0.9, 5.0, 1.0), True),
            FusionTrainingRecord((0.1, 5.0, 1.0), False),
            FusionTrainingRecord((0.8, 5.0, 1.0), True),
            FusionTrainingRecord((0.2, 5.0, 1.0), False),
        ]
        model = train_fusion(records)
        assert model.stds[1] == 1.0
        assert model.stds[2] == 1.0


class TestApplyFusion:
    def test_zero_weights_give_half(self):
        model = FusionModel([0, 0, 0, 0], [0, 0, 0], [1, 1, 1], trained_on=0)
        cands = [
            make_candidate("b", 1, 0.9, 1.0, 2),
            make_candidate("a", 0, 0.5, 2.0, 1),
        ]
        scored = apply_fusion(model, cands)
        assert all(s == 0.5 for _, s in scored)
        # ties fall back to (doc rank, sentence index)
        assert [c.sentence_id.doc_id for c, _ in scored] == ["a", "b"]

    def test_rank1_beats_rank6_when_trained_that_way(self):
        # gold evidence concentrates in rank-1 documents
        rng = random.Random(17)
        records = []
        for _ in range(300):
            rank = float(rng.choice([1, 6]))
            r_s = rng.uniform(0.4, 0.6)
            records.append(FusionTrainingRecord((r_s, 1.0 / rank, rank), rank == 1))
        model = train_fusion(records)
        low = make_candidate("mccartney", 0, 0.5, 1.0, 1)
        high = make_candidate("pope", 0, 0.5, 1.0, 6)
        scored = dict((c.sentence_id.doc_id, s) for c, s in apply_fusion(model, [low, high]))
        assert scored["mccartney"] > scored["pope"]

    def test_monotone_in_rs(self):
        rng = random.Random(23)
        model = train_fusion(random_records(rng, n=80))
        assert model.weights[1] > 0
        base = (0.3, 0.5, 4.0)
        bumped = (0.6, 0.5, 4.0)
        assert model.score(bumped) > model.score(base)

    def test_ordering_invariant_under_monotone_transform(self):
        rng = random.Random(29)
        model = train_fusion(random_records(rng, n=80))
        cands = [
            make_candidate(f"d{i}", i, rng.random(), rng.gauss(0, 1), rng.randint(1, 8))
            for i in range(20)
        ]
        by_sigmoid = [c.sentence_id for c, _ in apply_fusion(model, cands)]
        linear = sorted(
            cands,
            key=lambda c: (
                -model.decision((c.sent_score, c.doc_score, float(c.doc_rank))),
                c.doc_rank,
                c.sentence_id.sent_index,
            ),
        )
        assert by_sigmoid == [c.sentence_id for c in linear]

    def test_input_unmodified(self):
        model = FusionModel([0.1, 0.2, 0.3, -0.4], [0, 0, 0], [1, 1, 1], trained_on=1)
        cands = [make_candidate("a", 0, 0.5, 1.0, 1), make_candidate("b", 1, 0.9, 0.5, 2)]
        snapshot = list(cands)
        apply_fusion(model, cands)
        assert cands == snapshot


class TestSelectTopEvidence:
    def test_fewer_than_n(self):
        cands = [make_candidate("a", i, 0.5, 1.0, 1) for i in range(3)]
        assert select_top_evidence(cands, 5) == cands

    def test_n_one_is_argmax(self):
        model = FusionModel([0, 1, 0, 0], [0.5, 0, 0], [0.2, 1, 1], trained_on=1)
        cands = [
            make_candidate("a", 0, 0.2, 1.0, 1),
            make_candidate("b", 0, 0.9, 1.0, 2),
        ]
        scored = apply_fusion(model, cands)
        top = select_top_evidence(scored, 1)
        assert [c.sentence_id.doc_id for c in top] == ["b"]

    def test_top5_equals_full_sort(self):
        rng = random.Random(31)
        cands = [
            make_candidate(f"d{i}", i, rng.random(), rng.random(), rng.randint(1, 4))
            for i in range(8)
        ]
        ordered = sorted(
            cands, key=lambda c: (-c.sent_score, c.doc_rank, c.sentence_id.sent_index)
        )
        assert select_top_evidence(ordered, 5) == ordered[:5]
