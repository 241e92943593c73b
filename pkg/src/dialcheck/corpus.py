"""Corpus ingestion, tokenization, and the in-memory inverted index."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

from dialcheck.errors import DuplicateDocId, EmptyDocument, MissingField, ParseError

# Unicode word characters minus the underscore; keeps digits (years matter
# for retrieval) and drops all punctuation.
_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Small English stopword list used only where a caller opts in (the default
# tokenizer keeps everything for reproducibility).
STOPWORDS = frozenset(
    """a an and are as at be by for from has have he her his i in is it its
    of on or she that the this to was were will with you your""".split()
)


def tokenize(text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    """Lowercased Unicode word tokens with punctuation stripped.

    Total and deterministic; empty input yields an empty list.
    """
    tokens = _WORD_RE.findall(text.lower())
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    return tokens


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    sentences: tuple[str, ...]

    def __post_init__(self):
        if not self.doc_id:
            raise EmptyDocument(self.doc_id)
        if not self.sentences or any(not s.strip() for s in self.sentences):
            raise EmptyDocument(self.doc_id)
        if not isinstance(self.sentences, tuple):
            object.__setattr__(self, "sentences", tuple(self.sentences))

    def body_tokens(self) -> list[str]:
        """Tokens of title (counted twice, acting as a title boost) plus all sentences."""
        title = tokenize(self.title)
        tokens = title + title
        for s in self.sentences:
            tokens.extend(tokenize(s))
        return tokens


@dataclass(frozen=True, order=True)
class SentenceId:
    doc_id: str
    sent_index: int

    def as_dict(self):
        return {"doc_id": self.doc_id, "sent_index": self.sent_index}


class CorpusIndex:
    """Immutable searchable index over a document collection.

    Postings store (doc_id, term frequency) over each document's token
    stream, with title tokens counted twice so title matches dominate.
    """

    def __init__(self, documents: dict[str, Document]):
        self.documents = dict(documents)
        self.inverted_index: dict[str, list[tuple[str, int]]] = {}
        self.doc_lengths: dict[str, int] = {}
        self.doc_freq: dict[str, int] = {}
        for doc_id in sorted(self.documents):
            doc = self.documents[doc_id]
            counts = Counter(doc.body_tokens())
            self.doc_lengths[doc_id] = sum(counts.values())
            for token, tf in counts.items():
                self.inverted_index.setdefault(token, []).append((doc_id, tf))
                self.doc_freq[token] = self.doc_freq.get(token, 0) + 1
        self.num_docs = len(self.documents)
        self.avg_doc_length = (
            sum(self.doc_lengths.values()) / self.num_docs if self.num_docs else 0.0
        )

    def __len__(self):
        return self.num_docs

    def sentence_text(self, sid: SentenceId) -> str:
        return self.documents[sid.doc_id].sentences[sid.sent_index]


def build_index(documents) -> CorpusIndex:
    """Build a CorpusIndex from an iterable of Document; doc_ids must be unique."""
    by_id: dict[str, Document] = {}
    for doc in documents:
        if doc.doc_id in by_id:
            raise DuplicateDocId(doc.doc_id)
        by_id[doc.doc_id] = doc
    return CorpusIndex(by_id)


def load_corpus(path):
    """Yield Documents from a JSONL corpus file, in file order.

    Each line: {"doc_id": str, "title": str, "sentences": [str, ...]}.
    Malformed lines abort with the offending line number.
    """
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ParseError(path, line_no, "expected a JSON object")
            for fld in ("doc_id", "title", "sentences"):
                if fld not in obj:
                    raise MissingField(path, line_no, fld)
            try:
                yield Document(obj["doc_id"], obj["title"], tuple(obj["sentences"]))
            except EmptyDocument:
                raise
            except TypeError as exc:
                raise ParseError(path, line_no, str(exc)) from exc


def write_corpus(documents, path):
    """Write documents as canonical JSONL (sorted keys, compact separators)."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            fh.write(
                json.dumps(
                    {
                        "doc_id": doc.doc_id,
                        "title": doc.title,
                        "sentences": list(doc.sentences),
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                    separators=(",", ":"),
                )
                + "\n"
            )
