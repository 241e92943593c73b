"""Sentence retrieval and the learned rank-fusion scorer.

Every sentence of every retrieved document becomes an evidence candidate
scored by claim similarity. The fusion model combines that similarity
with the document-level relevance score and rank via logistic regression,
trained on gold evidence labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from dialcheck.corpus import CorpusIndex, SentenceId
from dialcheck.doc_retrieval import RetrievedDocSet, retrieve_documents
from dialcheck.errors import DegenerateLabels, NonFiniteFeature
from dialcheck.scorers import cosine

FUSION_DEFAULTS = {"l2_lambda": 1e-3, "max_iters": 500, "tol": 1e-8, "seed": 0}


@dataclass(frozen=True)
class EvidenceCandidate:
    sentence_id: SentenceId
    text: str
    sent_score: float   # r_s: similarity of the sentence to the claim
    doc_score: float    # r_D: claim-relevance of the source document
    doc_rank: int       # R_D: rank of the source document


@dataclass(frozen=True)
class FusionTrainingRecord:
    features: tuple[float, float, float]  # (r_s, r_D, R_D)
    label: bool


def score_sentences(claim: str, docs: RetrievedDocSet, index: CorpusIndex,
                    encoder) -> list[EvidenceCandidate]:
    """One candidate per sentence of every retrieved document.

    Sorted by claim similarity descending; ties by (doc rank, sentence index).
    """
    claim_vec = encoder.encode(claim)
    candidates = []
    for entry in docs:
        doc = index.documents[entry.doc_id]
        for sent_index, text in enumerate(doc.sentences):
            sim = cosine(claim_vec, encoder.encode(text))
            candidates.append(
                EvidenceCandidate(
                    sentence_id=SentenceId(entry.doc_id, sent_index),
                    text=text,
                    sent_score=sim,
                    doc_score=entry.score,
                    doc_rank=entry.rank,
                )
            )
    candidates.sort(key=lambda c: (-c.sent_score, c.doc_rank, c.sentence_id.sent_index))
    return candidates


def build_training_records(dataset, index: CorpusIndex, scorer, encoder,
                           k: int) -> list[FusionTrainingRecord]:
    """Run retrieval over labeled examples and emit (features, is-gold) records."""
    records = []
    for example in dataset:
        docs = retrieve_documents(example.conversation, scorer, k)
        if not docs.entries:
            continue
        gold = set(example.gold_evidence)
        for cand in score_sentences(example.conversation.claim, docs, index, encoder):
            records.append(
                FusionTrainingRecord(
                    features=(cand.sent_score, cand.doc_score, float(cand.doc_rank)),
                    label=cand.sentence_id in gold,
                )
            )
    return records


class FusionModel:
    """Logistic regression over standardized (r_s, r_D, R_D) features."""

    def __init__(self, weights, means, stds, trained_on: int):
        self.weights = np.asarray(weights, dtype=np.float64)  # [bias, w_rs, w_rD, w_RD]
        self.means = np.asarray(means, dtype=np.float64)
        self.stds = np.asarray(stds, dtype=np.float64)
        self.trained_on = trained_on
        if self.weights.shape != (4,) or self.means.shape != (3,) or self.stds.shape != (3,):
            raise ValueError("fusion model must have 4 weights and 3 means/stds")
        if np.any(self.stds <= 0):
            raise ValueError("feature stds must be strictly positive")

    def decision(self, features) -> float:
        z = (np.asarray(features, dtype=np.float64) - self.means) / self.stds
        return float(self.weights[0] + self.weights[1:] @ z)

    def score(self, features) -> float:
        return _sigmoid(self.decision(features))

    def to_json(self) -> str:
        def fmt(values):
            return "[" + ", ".join(format(float(v), ".17g") for v in values) + "]"

        return (
            "{"
            f'"weights": {fmt(self.weights)}, '
            f'"means": {fmt(self.means)}, '
            f'"stds": {fmt(self.stds)}, '
            f'"trained_on": {self.trained_on}'
            "}"
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "FusionModel":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return cls(obj["weights"], obj["means"], obj["stds"], obj["trained_on"])


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _design_matrix(records) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([r.features for r in records], dtype=np.float64)
    y = np.array([1.0 if r.label else 0.0 for r in records])
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("training features contain non-finite values")
    return X, y


def regularized_logloss(w: np.ndarray, Z: np.ndarray, y: np.ndarray,
                        l2_lambda: float, sample_weights: np.ndarray) -> float:
    """Mean weighted log-loss plus L2 penalty on the non-bias weights."""
    margin = w[0] + Z @ w[1:]
    # log(1 + exp(-|m|)) + max(-m*y_signed, 0) form avoids overflow
    losses = np.logaddexp(0.0, margin) - y * margin
    data = float(np.sum(sample_weights * losses) / np.sum(sample_weights))
    return data + 0.5 * l2_lambda * float(w[1:] @ w[1:])


def logloss_gradient(w: np.ndarray, Z: np.ndarray, y: np.ndarray,
                     l2_lambda: float, sample_weights: np.ndarray) -> np.ndarray:
    margin = w[0] + Z @ w[1:]
    p = 1.0 / (1.0 + np.exp(-np.clip(margin, -500, 500)))
    resid = sample_weights * (p - y) / np.sum(sample_weights)
    grad = np.empty(4)
    grad[0] = np.sum(resid)
    grad[1:] = Z.T @ resid + l2_lambda * w[1:]
    return grad


def train_fusion(records, l2_lambda: float = 1e-3, max_iters: int = 500,
                 tol: float = 1e-8, seed: int = 0,
                 positive_weight: float = 1.0) -> FusionModel:
    """Full-batch gradient descent with backtracking line search.

    Deterministic: zero-initialized weights, no stochastic steps (the seed
    is accepted for config uniformity). The loss decreases monotonically
    across accepted steps by the Armijo condition.
    """
    del seed
    if not records:
        raise DegenerateLabels("no training records")
    X, y = _design_matrix(records)
    if y.min() == y.max():
        raise DegenerateLabels("all training labels identical")

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds < 1e-12] = 1.0  # degenerate features contribute nothing after centering
    Z = (X - means) / stds

    sample_weights = np.where(y > 0.5, positive_weight, 1.0)
    w = np.zeros(4)
    loss = regularized_logloss(w, Z, y, l2_lambda, sample_weights)
    step = 1.0
    for _ in range(max_iters):
        grad = logloss_gradient(w, Z, y, l2_lambda, sample_weights)
        if np.linalg.norm(grad) < tol:
            break
        # Backtracking (Armijo) line search from the last accepted step size.
        step = min(step * 2.0, 1e6)
        while step > 1e-20:
            candidate = w - step * grad
            new_loss = regularized_logloss(candidate, Z, y, l2_lambda, sample_weights)
            if new_loss <= loss - 1e-4 * step * float(grad @ grad):
                break
            step *= 0.5
        else:
            break
        w = candidate
        loss = new_loss
    return FusionModel(w, means, stds, trained_on=len(records))


def apply_fusion(model: FusionModel, candidates) -> list[tuple[EvidenceCandidate, float]]:
    """Score candidates with the fusion model, best first.

    Ties broken by (doc rank, sentence index); the input list is unmodified.
    """
    scored = [
        (c, model.score((c.sent_score, c.doc_score, float(c.doc_rank))))
        for c in candidates
    ]
    scored.sort(key=lambda item: (-item[1], item[0].doc_rank, item[0].sentence_id.sent_index))
    return scored


def select_top_evidence(candidates, n: int = 5) -> list[EvidenceCandidate]:
    """First n candidates of an already-ordered candidate (or scored) list."""
    top = []
    for item in candidates[:n]:
        top.append(item[0] if isinstance(item, tuple) else item)
    return top
