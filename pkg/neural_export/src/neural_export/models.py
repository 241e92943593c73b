"""Builtin stand-in models.

Real encoder and retriever checkpoints are out of scope; each builtin model
is a small deterministic function with the same output shape, so exports
can be produced and replayed without any downloads.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

from .errors import ModelLoadError

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
_NEGATIONS = ("not", "no", "never")


def _tokens(text: str) -> set[str]:
    return set(_WORD_RE.findall(text.lower()))


class HashEmbedder:
    """Signed feature hashing into a fixed dimension, L2-normalized."""

    kind = "embeddings"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim

    def encode(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for token in _WORD_RE.findall(text.lower()):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            sign = 1.0 if value & 1 else -1.0
            vec[(value >> 1) % self.dim] += sign
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec

    def encode_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self.encode(t) for t in texts]


class OverlapScorer:
    """Jaccard overlap between claim tokens and document tokens."""

    kind = "doc-scores"

    def score(self, claim: str, docs) -> list[tuple[str, float]]:
        claim_tokens = _tokens(claim)
        scored = []
        for doc in docs:
            doc_tokens = _tokens(doc.title) | set().union(
                *(_tokens(s) for s in doc.sentences)
            ) if doc.sentences else _tokens(doc.title)
            union = claim_tokens | doc_tokens
            score = len(claim_tokens & doc_tokens) / len(union) if union else 0.0
            scored.append((doc.doc_id, score))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored


class OverlapVerifier:
    """Token-overlap verdict with a one-sided negation check."""

    kind = "verdicts"

    def classify(self, claim: str, evidence_texts: list[str]) -> tuple[str, float]:
        if not evidence_texts:
            return "NEI", 1.0
        claim_tokens = _tokens(claim)
        if not claim_tokens:
            return "NEI", 0.0
        best_overlap, best_text = 0.0, evidence_texts[0]
        for text in evidence_texts:
            overlap = len(claim_tokens & _tokens(text)) / len(claim_tokens)
            if overlap > best_overlap:
                best_overlap, best_text = overlap, text
        if best_overlap < 0.6:
            return "NEI", best_overlap
        claim_neg = self._negated(claim)
        if self._negated(best_text) != claim_neg:
            return "REFUTES", best_overlap
        return "SUPPORTS", best_overlap

    @staticmethod
    def _negated(text: str) -> bool:
        lowered = text.lower()
        return "n't" in lowered or bool(_tokens(text) & set(_NEGATIONS))


_ENCODER_RE = re.compile(r"^hash-encoder-(\d+)$")


def load_model(model_id: str):
    """Resolve a model identifier to a builtin backend."""
    match = _ENCODER_RE.match(model_id)
    if match:
        return HashEmbedder(int(match.group(1)))
    if model_id == "overlap-scorer":
        return OverlapScorer()
    if model_id == "overlap-verifier":
        return OverlapVerifier()
    raise ModelLoadError(
        model_id,
        "unknown model; available: hash-encoder-<dim>, overlap-scorer, overlap-verifier",
    )
