"""Context-union document retrieval for conversational claims.

Candidate documents are the top-k matches for the claim itself, unioned
with the single best match for each context utterance. Every candidate is
then rescored against the claim so ranks live on one comparable scale.
"""

from __future__ import annotations

from dataclasses import dataclass

from dialcheck.errors import EmptyClaim

# Context-sourced docs with no lexical overlap with the claim rank last,
# epsilon below the worst claim-scored candidate.
ZERO_OVERLAP_EPSILON = 1e-6

CLAIM_SOURCE = "claim"


@dataclass(frozen=True)
class Conversation:
    context: tuple[str, ...]
    claim: str

    def __post_init__(self):
        if not self.claim.strip():
            raise EmptyClaim("claim is empty")
        if not isinstance(self.context, tuple):
            object.__setattr__(self, "context", tuple(self.context))


@dataclass(frozen=True)
class RetrievedDoc:
    doc_id: str
    score: float       # claim-comparable relevance r_D
    rank: int          # 1-based rank R_D within the retrieved set
    source: str        # "claim" or "context:<utterance index>"


@dataclass(frozen=True)
class RetrievedDocSet:
    entries: tuple[RetrievedDoc, ...]

    def doc_ids(self) -> list[str]:
        return [e.doc_id for e in self.entries]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def retrieve_documents(conv: Conversation, scorer, k: int) -> RetrievedDocSet:
    """Union of claim top-k and one doc per context utterance, claim-rescored.

    Rank ties are broken by ascending doc_id for total determinism.
    Utterances that retrieve nothing (e.g. filler with no index tokens)
    contribute no candidate.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    claim_hits = scorer.score_query(conv.claim, k)
    claim_scores = dict(claim_hits)
    sources: dict[str, str] = {doc_id: CLAIM_SOURCE for doc_id, _ in claim_hits}

    for i, utterance in enumerate(conv.context, start=1):
        hits = scorer.score_query(utterance, 1)
        if not hits:
            continue
        doc_id = hits[0][0]
        sources.setdefault(doc_id, f"context:{i}")

    # Rescore all candidates against the claim on one scale.
    full_claim_scores = dict(scorer.score_query(conv.claim, 10**9)) if sources else {}
    scored = {d: full_claim_scores[d] for d in sources if d in full_claim_scores}
    floor = min(scored.values()) if scored else 0.0
    rescored = {d: scored.get(d, floor - ZERO_OVERLAP_EPSILON) for d in sources}

    ordered = sorted(rescored.items(), key=lambda item: (-item[1], item[0]))
    entries = tuple(
        RetrievedDoc(doc_id=d, score=s, rank=r, source=sources[d])
        for r, (d, s) in enumerate(ordered, start=1)
    )
    return RetrievedDocSet(entries)


def average_retrieved(conversations, scorer, k: int) -> tuple[float, float]:
    """Mean retrieved-set size and mean count of purely context-sourced docs."""
    if not conversations:
        raise ValueError("conversations must be non-empty")
    total = 0
    context_sourced = 0
    for conv in conversations:
        docs = retrieve_documents(conv, scorer, k)
        total += len(docs)
        context_sourced += sum(1 for e in docs if e.source != CLAIM_SOURCE)
    n = len(conversations)
    return total / n, context_sourced / n
