"""Dataset loading and retrieval/classification metrics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from dialcheck.corpus import SentenceId
from dialcheck.doc_retrieval import Conversation
from dialcheck.errors import (
    MissingField,
    MissingPrediction,
    MissingRetrieval,
    MissingSelection,
    ParseError,
    UnknownLabel,
)
from dialcheck.verification import LABELS, normalize_label


@dataclass(frozen=True)
class LabeledExample:
    example_id: str
    conversation: Conversation
    gold_label: str
    gold_evidence: frozenset[SentenceId]

    @property
    def gold_docs(self) -> frozenset[str]:
        return frozenset(sid.doc_id for sid in self.gold_evidence)


@dataclass(frozen=True)
class Rate:
    """A ratio with its denominator kept for auditability.

    A zero denominator marks the rate undefined (NaN), never silently 0.
    """
    hits: int
    total: int

    @property
    def defined(self) -> bool:
        return self.total > 0

    @property
    def value(self) -> float:
        return self.hits / self.total if self.total else math.nan

    def as_dict(self):
        return {
            "value": self.value if self.defined else None,
            "hits": self.hits,
            "total": self.total,
        }


@dataclass
class ClassMetrics:
    label: str
    tp: int = 0
    fp: int = 0
    fn: int = 0
    absent: bool = False  # label seen in neither gold nor predictions

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def as_dict(self):
        return {
            "label": self.label,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "absent": self.absent,
        }


@dataclass
class MetricsReport:
    doc_recall: Rate | None = None
    doc_recall_no_nei: Rate | None = None
    recall_at_5: Rate | None = None
    accuracy: Rate | None = None
    macro_f1: float | None = None
    per_class: list[ClassMetrics] = field(default_factory=list)

    def as_dict(self):
        return {
            "doc_recall": self.doc_recall.as_dict() if self.doc_recall else None,
            "doc_recall_no_nei": (
                self.doc_recall_no_nei.as_dict() if self.doc_recall_no_nei else None
            ),
            "recall_at_5": self.recall_at_5.as_dict() if self.recall_at_5 else None,
            "accuracy": self.accuracy.as_dict() if self.accuracy else None,
            "macro_f1": self.macro_f1,
            "per_class": [c.as_dict() for c in self.per_class],
        }

    def table(self) -> str:
        def fmt(rate):
            if rate is None:
                return "-"
            if not rate.defined:
                return "undefined (0 denom)"
            return f"{rate.value:.4f} ({rate.hits}/{rate.total})"

        lines = [
            f"{'Document recall':24s} {fmt(self.doc_recall)}",
            f"{'Document recall (no NEI)':24s} {fmt(self.doc_recall_no_nei)}",
            f"{'Recall@5':24s} {fmt(self.recall_at_5)}",
            f"{'Accuracy':24s} {fmt(self.accuracy)}",
            f"{'Macro F1':24s} "
            + ("-" if self.macro_f1 is None else f"{self.macro_f1:.4f}"),
        ]
        for cm in self.per_class:
            lines.append(
                f"  {cm.label:22s} P={cm.precision:.4f} R={cm.recall:.4f} F1={cm.f1:.4f}"
                + (" [absent]" if cm.absent else "")
            )
        return "\n".join(lines)


def _parse_canonical(obj, path, line_no) -> LabeledExample:
    for fld in ("example_id", "context", "claim", "label", "evidence"):
        if fld not in obj:
            raise MissingField(path, line_no, fld)
    evidence = frozenset(
        SentenceId(e["doc_id"], int(e["sent_index"])) for e in obj["evidence"]
    )
    return LabeledExample(
        example_id=str(obj["example_id"]),
        conversation=Conversation(tuple(obj["context"]), obj["claim"]),
        gold_label=normalize_label(obj["label"]),
        gold_evidence=evidence,
    )


def _parse_dialfact(obj, path, line_no) -> LabeledExample:
    for fld in ("context", "response", "response_label", "evidence_list"):
        if fld not in obj:
            raise MissingField(path, line_no, fld)
    evidence = frozenset(
        SentenceId(item[0], int(item[1])) for item in obj["evidence_list"]
    )
    return LabeledExample(
        example_id=str(obj.get("id", f"dialfact-{line_no}")),
        conversation=Conversation(tuple(obj["context"]), obj["response"]),
        gold_label=normalize_label(obj["response_label"]),
        gold_evidence=evidence,
    )


def _parse_fever(obj, path, line_no) -> LabeledExample:
    for fld in ("id", "claim", "label", "evidence"):
        if fld not in obj:
            raise MissingField(path, line_no, fld)
    evidence = set()
    for annotation in obj["evidence"]:
        for item in annotation:
            # [annotation_id, evidence_id, page, sent_index]; NEI rows carry nulls
            if item[2] is not None and item[3] is not None:
                evidence.add(SentenceId(item[2], int(item[3])))
    return LabeledExample(
        example_id=str(obj["id"]),
        conversation=Conversation((), obj["claim"]),
        gold_label=normalize_label(obj["label"]),
        gold_evidence=frozenset(evidence),
    )


_PARSERS = {"canonical": _parse_canonical, "dialfact": _parse_dialfact, "fever": _parse_fever}


def load_dataset(path, format: str = "canonical") -> list[LabeledExample]:
    """Load a JSONL dataset; format is canonical, dialfact, or fever."""
    if format not in _PARSERS:
        raise ValueError(f"unknown dataset format {format!r}")
    parser = _PARSERS[format]
    examples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            try:
                examples.append(parser(obj, path, line_no))
            except ValueError as exc:
                raise UnknownLabel(path, line_no, str(exc)) from exc
    return examples


def write_dataset(examples, path):
    """Write examples in the canonical JSONL format."""
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(
                json.dumps(
                    {
                        "example_id": ex.example_id,
                        "context": list(ex.conversation.context),
                        "claim": ex.conversation.claim,
                        "label": ex.gold_label,
                        "evidence": [
                            sid.as_dict() for sid in sorted(ex.gold_evidence)
                        ],
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def document_recall(examples, retrieved, exclude_nei: bool = False) -> Rate:
    """Fraction of evaluable examples whose retrieved docs hit a gold doc.

    Examples without gold evidence are excluded from the denominator; with
    exclude_nei, NEI-labeled examples are excluded too.
    """
    hits = 0
    total = 0
    for ex in examples:
        if not ex.gold_docs:
            continue
        if exclude_nei and ex.gold_label == "NEI":
            continue
        if ex.example_id not in retrieved:
            raise MissingRetrieval(ex.example_id)
        total += 1
        retrieved_ids = set(retrieved[ex.example_id].doc_ids())
        if ex.gold_docs & retrieved_ids:
            hits += 1
    return Rate(hits, total)


def recall_at_k(examples, selected, k: int = 5) -> Rate:
    """Fraction of evaluable examples with a gold sentence in the top-k selection."""
    hits = 0
    total = 0
    for ex in examples:
        if not ex.gold_evidence:
            continue
        if ex.example_id not in selected:
            raise MissingSelection(ex.example_id)
        total += 1
        top = set(selected[ex.example_id][:k])
        if ex.gold_evidence & top:
            hits += 1
    return Rate(hits, total)


def classification_metrics(examples, predictions) -> tuple[Rate, float, list[ClassMetrics]]:
    """Accuracy, macro F1, and the per-class confusion breakdown.

    A class absent from both gold and predictions contributes F1 = 0 to the
    macro mean and is flagged.
    """
    examples = list(examples)
    per_class = {label: ClassMetrics(label) for label in LABELS}
    correct = 0
    for ex in examples:
        if ex.example_id not in predictions:
            raise MissingPrediction(ex.example_id)
        pred = predictions[ex.example_id].label
        gold = ex.gold_label
        if pred == gold:
            correct += 1
            per_class[gold].tp += 1
        else:
            per_class[gold].fn += 1
            per_class[pred].fp += 1
    for cm in per_class.values():
        cm.absent = (cm.tp + cm.fp + cm.fn) == 0
    table = [per_class[label] for label in LABELS]
    macro_f1 = sum(cm.f1 for cm in table) / len(table)
    return Rate(correct, len(examples)), macro_f1, table
