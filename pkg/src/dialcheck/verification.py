"""Three-way claim verification against selected evidence.

Verifiers are pluggable: a deterministic lexical-overlap baseline keeps the
pipeline executable end-to-end, and a replay adapter feeds back verdicts
produced offline by a stronger model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from dialcheck.corpus import STOPWORDS, SentenceId, tokenize
from dialcheck.errors import ParseError, UnknownQuery

SUPPORTS = "SUPPORTS"
REFUTES = "REFUTES"
NOT_ENOUGH_INFO = "NEI"
LABELS = (SUPPORTS, REFUTES, NOT_ENOUGH_INFO)

OVERLAP_THRESHOLD = 0.6
NEGATION_CUES = ("not", "no", "never")


@dataclass(frozen=True)
class Verdict:
    label: str
    confidence: float
    used_evidence: tuple[SentenceId, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"invalid verdict label {self.label!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence}")


def _has_negation(text: str) -> bool:
    tokens = set(tokenize(text))
    return bool(tokens & set(NEGATION_CUES)) or "n't" in text.lower()


class LexicalVerifier:
    """Content-token overlap baseline.

    Overlap o = |claim ∩ best evidence| / |claim tokens| over stopword-free
    tokens; o >= 0.6 yields SUPPORTS, or REFUTES when exactly one side
    carries a negation cue. Confidence is the overlap ratio.
    """

    def classify(self, claim: str, evidence, example_id=None) -> Verdict:
        claim_tokens = set(tokenize(claim, stopwords=STOPWORDS))
        if not claim_tokens:
            return Verdict(NOT_ENOUGH_INFO, 0.0)
        best = None
        best_overlap = -1.0
        for cand in evidence:
            overlap = len(claim_tokens & set(tokenize(cand.text, stopwords=STOPWORDS)))
            ratio = overlap / len(claim_tokens)
            if ratio > best_overlap:
                best_overlap = ratio
                best = cand
        confidence = min(max(best_overlap, 0.0), 1.0)
        if best is None or best_overlap < OVERLAP_THRESHOLD:
            return Verdict(NOT_ENOUGH_INFO, confidence)
        mismatch = _has_negation(claim) != _has_negation(best.text)
        label = REFUTES if mismatch else SUPPORTS
        return Verdict(label, confidence, used_evidence=(best.sentence_id,))


class PrecomputedVerifier:
    """Replays verdicts keyed by example_id from a TSV dump."""

    def __init__(self, verdicts: dict[str, Verdict]):
        self.verdicts = dict(verdicts)

    def classify(self, claim: str, evidence, example_id=None) -> Verdict:
        if example_id not in self.verdicts:
            raise UnknownQuery(example_id)
        return self.verdicts[example_id]


def verify(claim: str, evidence, verifier, example_id=None) -> Verdict:
    """Delegate to the verifier; empty evidence is always NEI with confidence 1."""
    if not evidence:
        return Verdict(NOT_ENOUGH_INFO, 1.0)
    return verifier.classify(claim, evidence, example_id=example_id)


def normalize_label(value: str) -> str:
    """Map common label spellings onto the canonical three-way set."""
    key = value.strip().upper().replace(" ", "_")
    aliases = {
        "SUPPORTS": SUPPORTS,
        "SUPPORTED": SUPPORTS,
        "REFUTES": REFUTES,
        "REFUTED": REFUTES,
        "NEI": NOT_ENOUGH_INFO,
        "NOT_ENOUGH_INFO": NOT_ENOUGH_INFO,
        "NOT_ENOUGH_INFORMATION": NOT_ENOUGH_INFO,
    }
    if key not in aliases:
        raise ValueError(f"unknown label {value!r}")
    return aliases[key]


def load_verdicts(path) -> dict[str, Verdict]:
    """Load a verdict dump: TSV columns example_id, label, confidence."""
    verdicts = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ParseError(path, line_no, f"expected 3 columns, got {len(parts)}")
            example_id, label, confidence = parts
            try:
                verdicts[example_id] = Verdict(normalize_label(label), float(confidence))
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
    return verdicts


def write_verdicts(verdicts: dict[str, Verdict], path):
    with open(path, "w", encoding="utf-8") as fh:
        for example_id, verdict in verdicts.items():
            fh.write(f"{example_id}\t{verdict.label}\t{verdict.confidence!r}\n")
