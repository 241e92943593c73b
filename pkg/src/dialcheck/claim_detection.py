"""Sub-sentence claim detection.

Conversational claims often bundle filler ("Yes. I really like this band
so I know.") with the checkable statement. This module splits a claim into
sub-sentences and keeps the one most similar to the retrieved evidence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from dialcheck.scorers import cosine

# Trailing abbreviations that must not end a sub-sentence.
ABBREVIATIONS = frozenset(
    ["mr", "mrs", "ms", "dr", "prof", "st", "etc", "vs", "e.g", "i.e", "u.s", "no", "jr", "sr"]
)

# '.', '!' or '?' followed by whitespace and an uppercase letter, digit or quote.
_BOUNDARY_RE = re.compile(r"[.!?](?=\s+[\"'“‘A-Z0-9])")


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class SubSentenceSplit:
    source: str
    spans: tuple[Span, ...]


def _is_abbreviation(text: str, dot_pos: int) -> bool:
    """True if the token ending at text[dot_pos] == '.' is a known abbreviation."""
    if text[dot_pos] != ".":
        return False
    i = dot_pos - 1
    while i >= 0 and (text[i].isalnum() or text[i] == "."):
        i -= 1
    token = text[i + 1:dot_pos].lower()
    return token in ABBREVIATIONS or (len(token) == 1 and token.isalpha())


def split_sentences(text: str) -> SubSentenceSplit:
    """Split a claim into sub-sentence spans; offsets index into the original text.

    Span texts joined with the skipped separators reconstruct the input
    exactly. Single initials and a built-in abbreviation list suppress
    boundaries after '.'.
    """
    if not text.strip():
        raise ValueError("cannot split empty text")
    boundaries = [
        m.start() + 1
        for m in _BOUNDARY_RE.finditer(text)
        if not _is_abbreviation(text, m.start())
    ]
    spans = []
    prev = 0
    for cut in boundaries + [len(text)]:
        chunk = text[prev:cut]
        stripped = chunk.strip()
        if stripped:
            start = prev + (len(chunk) - len(chunk.lstrip()))
            end = start + len(stripped)
            spans.append(Span(start, end, text[start:end]))
        prev = cut
    return SubSentenceSplit(source=text, spans=tuple(spans))


def detect_claim(claim: str, evidence, encoder, aggregation: str = "max") -> str:
    """Return the sub-sentence of the claim most similar to the evidence.

    Single-span claims and empty evidence pass through unchanged. Similarity
    per span is the max (or mean, behind the flag) cosine against the
    evidence sentences; ties go to the earliest span.
    """
    split = split_sentences(claim)
    if len(split.spans) <= 1 or not evidence:
        return claim
    evidence_vecs = [encoder.encode(e.text) for e in evidence]
    best_span = None
    best_score = -float("inf")
    for span in split.spans:
        vec = encoder.encode(span.text)
        sims = [cosine(vec, ev) for ev in evidence_vecs]
        score = max(sims) if aggregation == "max" else sum(sims) / len(sims)
        if score > best_score:
            best_score = score
            best_span = span
    return best_span.text
