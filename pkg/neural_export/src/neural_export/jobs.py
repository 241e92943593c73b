"""Export jobs: run a model over a dataset and write a replay file.

Output formats match the dialcheck loaders exactly:
  doc-scores  TSV rows  query<TAB>doc_id<TAB>score, per-query contiguous,
              scores descending
  embeddings  TSV with a "key<TAB>v0..v{d-1}" header, one row per key
  verdicts    TSV rows  example_id<TAB>label<TAB>confidence

Keys and queries are NFC-normalized the same way the loaders normalize
them. Output is written to a temporary file and renamed into place, so a
failing job never leaves a partial file behind.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import RecordError, UsageError
from .io import nfc, read_corpus, read_dataset
from .models import load_model

KINDS = ("doc-scores", "embeddings", "verdicts")


@dataclass
class ExportJob:
    dataset_path: str
    corpus_path: str
    out_path: str
    kind: str
    model_id: str
    batch_size: int = 32

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown kind {self.kind!r}, expected one of {KINDS}")
        if self.batch_size < 1:
            raise UsageError("batch size must be >= 1")


def _write_doc_scores(fh, model, records, corpus) -> int:
    """One block per query, first occurrence wins for duplicate queries.

    Context utterances are exported alongside claims: context-aware document
    retrieval issues one query per context turn, so a replayable dump has to
    cover them too.
    """
    docs = [corpus[doc_id] for doc_id in sorted(corpus)]
    rows = 0
    seen = set()
    for record in records:
        for text in (record.claim,) + record.context:
            query = nfc(text)
            if query in seen:
                continue
            seen.add(query)
            try:
                scored = model.score(text, docs)
            except Exception as exc:
                raise RecordError(record.example_id, str(exc)) from exc
            for doc_id, score in scored:
                fh.write(f"{query}\t{doc_id}\t{score!r}\n")
                rows += 1
    return rows


def _write_embeddings(fh, model, records, batch_size: int) -> int:
    keys = []
    seen = set()
    for record in records:
        key = nfc(record.claim)
        if key not in seen:
            seen.add(key)
            keys.append((record.example_id, key))
    fh.write("key\t" + "\t".join(f"v{i}" for i in range(model.dim)) + "\n")
    rows = 0
    for start in range(0, len(keys), batch_size):
        batch = keys[start:start + batch_size]
        try:
            vectors = model.encode_batch([key for _, key in batch])
        except Exception as exc:
            raise RecordError(batch[0][0], str(exc)) from exc
        for (_, key), vec in zip(batch, vectors):
            fh.write(key + "\t" + "\t".join(repr(float(x)) for x in vec) + "\n")
            rows += 1
    return rows


def _write_verdicts(fh, model, records, corpus) -> int:
    rows = 0
    seen = set()
    for record in records:
        if record.example_id in seen:
            raise RecordError(record.example_id, "duplicate example_id")
        seen.add(record.example_id)
        texts = []
        for doc_id, sent_index in record.evidence:
            if doc_id not in corpus:
                raise RecordError(record.example_id, f"evidence doc {doc_id!r} not in corpus")
            sentences = corpus[doc_id].sentences
            if not 0 <= sent_index < len(sentences):
                raise RecordError(
                    record.example_id,
                    f"evidence sentence {doc_id}/{sent_index} out of range",
                )
            texts.append(sentences[sent_index])
        label, confidence = model.classify(record.claim, texts)
        fh.write(f"{record.example_id}\t{label}\t{confidence!r}\n")
        rows += 1
    return rows


def export(job: ExportJob) -> int:
    """Run the job and return the number of data rows written."""
    model = load_model(job.model_id)
    if model.kind != job.kind:
        raise UsageError(
            f"model {job.model_id!r} produces {model.kind!r}, not {job.kind!r}"
        )
    records = read_dataset(job.dataset_path)
    corpus = read_corpus(job.corpus_path)
    tmp_path = f"{job.out_path}.tmp.{os.getpid()}"
    try:
        with open(tmp_path, "w", encoding="utf-8") as fh:
            if job.kind == "doc-scores":
                rows = _write_doc_scores(fh, model, records, corpus)
            elif job.kind == "embeddings":
                rows = _write_embeddings(fh, model, records, job.batch_size)
            else:
                rows = _write_verdicts(fh, model, records, corpus)
        os.replace(tmp_path, job.out_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return rows
