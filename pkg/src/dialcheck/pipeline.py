"""End-to-end pipeline: document retrieval, sentence retrieval with optional
fusion, optional claim detection, and verification, with per-example traces."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from dialcheck.corpus import CorpusIndex
from dialcheck.doc_retrieval import Conversation, RetrievedDocSet, retrieve_documents
from dialcheck.errors import StageError
from dialcheck.sent_retrieval import (
    FusionModel,
    apply_fusion,
    score_sentences,
    select_top_evidence,
)
from dialcheck.claim_detection import detect_claim
from dialcheck.verification import Verdict, verify

BASELINE_MODES = ("eq1", "claim_only", "concat_last2")


@dataclass
class PipelineConfig:
    k: int = 10
    top_n_sentences: int = 5
    use_fusion: bool = False
    fusion_model_path: str | None = None
    use_claim_detection: bool = False
    baseline_mode: str = "eq1"
    detection_aggregation: str = "max"
    redetect_retrieval: bool = False  # re-run retrieval on the detected claim

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.top_n_sentences < 1:
            raise ValueError("top_n_sentences must be >= 1")
        if self.baseline_mode not in BASELINE_MODES:
            raise ValueError(f"unknown baseline mode {self.baseline_mode!r}")
        if self.use_fusion and not self.fusion_model_path:
            raise ValueError("use_fusion requires fusion_model_path")


@dataclass
class PipelineResources:
    index: CorpusIndex
    scorer: object
    encoder: object
    verifier: object
    fusion_model: FusionModel | None = None


@dataclass
class ExampleTrace:
    example_id: str
    retrieved: RetrievedDocSet
    sentences: list  # (EvidenceCandidate, fused_score or None)
    selected: list   # top-n EvidenceCandidate
    detected_claim: str
    verdict: Verdict

    def as_dict(self):
        return {
            "example_id": self.example_id,
            "retrieved": [
                {"doc_id": e.doc_id, "score": e.score, "rank": e.rank, "source": e.source}
                for e in self.retrieved
            ],
            "sentences": [
                {
                    "doc_id": c.sentence_id.doc_id,
                    "sent_index": c.sentence_id.sent_index,
                    "sent_score": c.sent_score,
                    "doc_score": c.doc_score,
                    "doc_rank": c.doc_rank,
                    "fused_score": fused,
                }
                for c, fused in self.sentences
            ],
            "selected": [c.sentence_id.as_dict() for c in self.selected],
            "detected_claim": self.detected_claim,
            "verdict": {
                "label": self.verdict.label,
                "confidence": self.verdict.confidence,
                "used_evidence": [sid.as_dict() for sid in self.verdict.used_evidence],
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), ensure_ascii=False, sort_keys=True)


def _retrieval_conversation(conv: Conversation, mode: str) -> Conversation:
    if mode == "eq1":
        return conv
    if mode == "claim_only":
        return Conversation((), conv.claim)
    # concat_last2: the claim concatenated with the last two context utterances,
    # issued as a single claim-only query.
    tail = conv.context[-2:]
    return Conversation((), " ".join(tail + (conv.claim,)))


def run_pipeline(example, config: PipelineConfig,
                 resources: PipelineResources) -> ExampleTrace:
    """Run one labeled example through every configured stage."""
    conv = example.conversation

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            raise StageError(example.example_id, name, exc) from exc

    retrieved = stage(
        "doc_retrieval",
        lambda: retrieve_documents(
            _retrieval_conversation(conv, config.baseline_mode),
            resources.scorer,
            config.k,
        ),
    )

    def _sentences(query):
        if not retrieved.entries:
            return []
        candidates = score_sentences(query, retrieved, resources.index, resources.encoder)
        if config.use_fusion:
            return apply_fusion(resources.fusion_model, candidates)
        return [(c, None) for c in candidates]

    sentences = stage("sent_retrieval", lambda: _sentences(conv.claim))
    selected = select_top_evidence([c for c, _ in sentences], config.top_n_sentences)

    def _detect():
        if not config.use_claim_detection:
            return conv.claim
        return detect_claim(
            conv.claim, selected, resources.encoder,
            aggregation=config.detection_aggregation,
        )

    detected = stage("claim_detection", _detect)

    if config.use_claim_detection and config.redetect_retrieval and detected != conv.claim:
        retrieved = stage(
            "doc_retrieval_second_pass",
            lambda: retrieve_documents(
                Conversation(conv.context, detected), resources.scorer, config.k
            ),
        )
        sentences = stage("sent_retrieval", lambda: _sentences(detected))
        selected = select_top_evidence([c for c, _ in sentences], config.top_n_sentences)

    verdict = stage(
        "verification",
        lambda: verify(detected, selected, resources.verifier, example_id=example.example_id),
    )
    return ExampleTrace(
        example_id=example.example_id,
        retrieved=retrieved,
        sentences=sentences,
        selected=selected,
        detected_claim=detected,
        verdict=verdict,
    )


def run_dataset(examples, config: PipelineConfig, resources: PipelineResources,
                threads: int = 1) -> list[ExampleTrace]:
    """Run every example; output order matches input order regardless of threads."""
    if threads <= 1:
        return [run_pipeline(ex, config, resources) for ex in examples]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ex: run_pipeline(ex, config, resources), examples))


def write_traces(traces, path):
    with open(path, "w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(trace.to_json() + "\n")
