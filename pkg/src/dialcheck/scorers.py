"""Document scorers and sentence encoders.

Large neural components (an entity retriever for document scoring, a
transformer sentence encoder) are represented here by two kinds of
implementations: deterministic lexical references (BM25, TF-IDF, hashed
bag-of-words) and file-backed adapters that replay externally computed
scores or embeddings.
"""

from __future__ import annotations

import hashlib
import math
import unicodedata
from typing import Protocol

import numpy as np

from dialcheck.corpus import CorpusIndex, tokenize
from dialcheck.errors import DimensionMismatch, ParseError, UnknownQuery

BM25_K1 = 1.2
BM25_B = 0.75


class DocScorer(Protocol):
    def score_query(self, query: str, k: int) -> list[tuple[str, float]]:
        """Top-k (doc_id, score), scores descending, ties by ascending doc_id."""
        ...


class SentenceEncoder(Protocol):
    def encode(self, text: str):
        """Fixed-dimension vector; sparse dict or dense ndarray."""
        ...


def _sorted_topk(scores: dict[str, float], k: int) -> list[tuple[str, float]]:
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


class BM25Scorer:
    """BM25 over title+sentences with title tokens double-counted.

    Uses the non-negative idf variant log(1 + (N - df + 0.5) / (df + 0.5)).
    """

    def __init__(self, index: CorpusIndex, k1: float = BM25_K1, b: float = BM25_B):
        self.index = index
        self.k1 = k1
        self.b = b

    def _idf(self, token: str) -> float:
        df = self.index.doc_freq.get(token, 0)
        return math.log(1.0 + (self.index.num_docs - df + 0.5) / (df + 0.5))

    def score_query(self, query: str, k: int) -> list[tuple[str, float]]:
        scores: dict[str, float] = {}
        for token in tokenize(query):
            postings = self.index.inverted_index.get(token)
            if not postings:
                continue
            idf = self._idf(token)
            for doc_id, tf in postings:
                dl = self.index.doc_lengths[doc_id]
                norm = self.k1 * (1 - self.b + self.b * dl / self.index.avg_doc_length)
                scores[doc_id] = scores.get(doc_id, 0.0) + idf * tf * (self.k1 + 1) / (tf + norm)
        return _sorted_topk(scores, k)


class TfidfEncoder:
    """Sparse TF-IDF sentence encoder over the corpus vocabulary.

    idf(t) = log((1 + N) / (1 + df(t))) + 1, so unseen tokens still get a
    finite positive weight. Output is L2-normalized unless all-zero.
    """

    def __init__(self, index: CorpusIndex):
        self.index = index

    def encode(self, text: str) -> dict[str, float]:
        counts: dict[str, int] = {}
        for token in tokenize(text):
            counts[token] = counts.get(token, 0) + 1
        n = self.index.num_docs
        vec = {
            t: tf * (math.log((1 + n) / (1 + self.index.doc_freq.get(t, 0))) + 1)
            for t, tf in counts.items()
        }
        norm = math.sqrt(sum(w * w for w in vec.values()))
        if norm > 0:
            vec = {t: w / norm for t, w in vec.items()}
        return vec


class HashedEncoder:
    """Signed feature hashing into a fixed dense dimension (default 2^15).

    Corpus-free alternative to TF-IDF for corpora too small for useful idf.
    """

    def __init__(self, dim: int = 2**15):
        self.dim = dim

    def encode(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokenize(text):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            sign = 1.0 if value & 1 else -1.0
            vec[(value >> 1) % self.dim] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


def cosine(u, v) -> float:
    """Cosine similarity for sparse-dict or dense-array vectors."""
    if isinstance(u, dict):
        if len(v) < len(u):
            u, v = v, u
        dot = sum(w * v.get(t, 0.0) for t, w in u.items())
        nu = math.sqrt(sum(w * w for w in u.values()))
        nv = math.sqrt(sum(w * w for w in v.values()))
    else:
        dot = float(np.dot(u, v))
        nu = float(np.linalg.norm(u))
        nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


class PrecomputedScoreTable:
    """Replay adapter for externally computed document scores.

    Keys are NFC-normalized exact query strings. Implements DocScorer by
    truncating the stored (already ordered) list.
    """

    def __init__(self, entries: dict[str, list[tuple[str, float]]]):
        self.entries = {_nfc(q): list(docs) for q, docs in entries.items()}

    def lookup(self, query: str, k: int) -> list[tuple[str, float]]:
        key = _nfc(query)
        if key not in self.entries:
            raise UnknownQuery(query)
        return self.entries[key][:k]

    score_query = lookup


def load_precomputed_scores(path) -> PrecomputedScoreTable:
    """Load a TSV score dump: query_text, doc_id, score (rows per query contiguous)."""
    entries: dict[str, list[tuple[str, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ParseError(path, line_no, f"expected 3 columns, got {len(parts)}")
            query, doc_id, score = parts
            try:
                entries.setdefault(_nfc(query), []).append((doc_id, float(score)))
            except ValueError as exc:
                raise ParseError(path, line_no, f"bad score {score!r}") from exc
    return PrecomputedScoreTable(entries)


def write_precomputed_scores(table: PrecomputedScoreTable, path):
    with open(path, "w", encoding="utf-8") as fh:
        for query, docs in table.entries.items():
            for doc_id, score in docs:
                fh.write(f"{query}\t{doc_id}\t{score!r}\n")


class PrecomputedEmbeddingTable:
    """Replay adapter for externally computed sentence embeddings.

    encode() is an exact-key lookup after NFC normalization; all stored
    vectors share one dimension.
    """

    def __init__(self, vectors: dict[str, np.ndarray]):
        dims = {v.shape[0] for v in vectors.values()}
        if len(dims) > 1:
            raise DimensionMismatch(f"mixed embedding dimensions: {sorted(dims)}")
        self.dim = dims.pop() if dims else 0
        self.vectors = {_nfc(k): np.asarray(v, dtype=np.float64) for k, v in vectors.items()}

    def encode(self, text: str) -> np.ndarray:
        key = _nfc(text)
        if key not in self.vectors:
            raise UnknownQuery(text)
        return self.vectors[key]


def load_precomputed_embeddings(path) -> PrecomputedEmbeddingTable:
    """Load a TSV embedding dump: header declares the dimension, then key + d floats."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.rstrip("\n"):
                continue
            parts = line.rstrip("\n").split("\t")
            if line_no == 1:
                if len(parts) < 2 or parts[0] != "key":
                    raise ParseError(path, line_no, "expected header: key\\t<d columns>")
                dim = len(parts) - 1
                continue
            if len(parts) - 1 != dim:
                raise DimensionMismatch(
                    f"{path}:{line_no}: expected {dim} values, got {len(parts) - 1}"
                )
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(path, line_no, "bad float value") from exc
            vectors[_nfc(parts[0])] = vec
    return PrecomputedEmbeddingTable(vectors)


def write_precomputed_embeddings(table: PrecomputedEmbeddingTable, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("key\t" + "\t".join(f"v{i}" for i in range(table.dim)) + "\n")
        for key, vec in table.vectors.items():
            fh.write(key + "\t" + "\t".join(repr(float(x)) for x in vec) + "\n")
