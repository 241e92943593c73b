"""Readers for the JSONL dataset and corpus formats.

These mirror the schemas published by the dialcheck package without
importing it; the files are the contract between the two sides.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass

from .errors import DataError


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class CorpusDoc:
    doc_id: str
    title: str
    sentences: tuple[str, ...]


@dataclass(frozen=True)
class DatasetRecord:
    example_id: str
    context: tuple[str, ...]
    claim: str
    label: str
    evidence: tuple[tuple[str, int], ...]


def _line_objects(path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(path, line_no, f"invalid JSON: {exc.msg}") from exc


def read_corpus(path) -> dict[str, CorpusDoc]:
    """Load a corpus file: one {"doc_id", "title", "sentences"} object per line."""
    docs: dict[str, CorpusDoc] = {}
    for line_no, obj in _line_objects(path):
        for field in ("doc_id", "title", "sentences"):
            if field not in obj:
                raise DataError(path, line_no, f"missing field {field!r}")
        doc = CorpusDoc(obj["doc_id"], obj["title"], tuple(obj["sentences"]))
        if doc.doc_id in docs:
            raise DataError(path, line_no, f"duplicate doc_id {doc.doc_id!r}")
        docs[doc.doc_id] = doc
    return docs


def read_dataset(path) -> list[DatasetRecord]:
    """Load a dataset file: one example object per line, evidence optional."""
    records = []
    for line_no, obj in _line_objects(path):
        for field in ("example_id", "claim"):
            if field not in obj:
                raise DataError(path, line_no, f"missing field {field!r}")
        evidence = tuple(
            (e["doc_id"], int(e["sent_index"])) for e in obj.get("evidence", [])
        )
        records.append(DatasetRecord(
            example_id=obj["example_id"],
            context=tuple(obj.get("context", [])),
            claim=obj["claim"],
            label=obj.get("label", "NEI"),
            evidence=evidence,
        ))
    return records
