"""Command-line interface.

Exit codes: 0 success, 1 runtime error, 2 usage error. DIALCHECK_LOG
(error|warn|info|debug) controls logging verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from dialcheck import corpus as corpus_mod
from dialcheck import evaluation
from dialcheck.doc_retrieval import average_retrieved, retrieve_documents
from dialcheck.errors import DialcheckError, UsageError
from dialcheck.pipeline import (
    BASELINE_MODES,
    PipelineConfig,
    PipelineResources,
    run_dataset,
    write_traces,
)
from dialcheck.scorers import (
    BM25Scorer,
    HashedEncoder,
    TfidfEncoder,
    load_precomputed_embeddings,
    load_precomputed_scores,
)
from dialcheck.sent_retrieval import (
    FUSION_DEFAULTS,
    FusionModel,
    build_training_records,
    train_fusion,
)
from dialcheck.verification import (
    LexicalVerifier,
    PrecomputedVerifier,
    load_verdicts,
    write_verdicts,
)

log = logging.getLogger("dialcheck")


def _setup_logging():
    level = os.environ.get("DIALCHECK_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _add_corpus_flags(p):
    p.add_argument("--corpus", required=True, help="corpus JSONL file")
    p.add_argument("--scorer", choices=["bm25", "precomputed"], default="bm25")
    p.add_argument("--scores", help="score dump TSV (for --scorer precomputed)")
    p.add_argument("--encoder", choices=["tfidf", "hashed", "precomputed"], default="tfidf")
    p.add_argument("--embeddings", help="embedding dump TSV (for --encoder precomputed)")


def _add_dataset_flags(p):
    p.add_argument("--dataset", required=True, help="dataset JSONL file")
    p.add_argument("--dataset-format", choices=["canonical", "dialfact", "fever"],
                   default="canonical")


def _positive_int(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dialcheck",
                                     description="Dialogue fact-checking pipeline")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=_positive_int, default=1)
    parser.add_argument("--json", action="store_true", help="also emit JSON to stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index-build", help="build the in-memory index and print stats")
    p.add_argument("--corpus", required=True)

    p = sub.add_parser("retrieve-docs", help="document retrieval + recall report")
    _add_corpus_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--mode", choices=list(BASELINE_MODES) + ["claim-only", "concat-last2"],
                   default="eq1")
    p.add_argument("--out", help="write retrieved sets as JSONL")

    p = sub.add_parser("retrieve-sents", help="sentence retrieval + Recall@5 report")
    _add_corpus_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--top-n", type=_positive_int, default=5)
    p.add_argument("--fusion-model", help="apply a trained fusion model")
    p.add_argument("--mode", choices=list(BASELINE_MODES) + ["claim-only", "concat-last2"],
                   default="eq1")
    p.add_argument("--out", help="write selected evidence as JSONL")

    p = sub.add_parser("fusion-train", help="train the rank-fusion model")
    _add_corpus_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--out", required=True, help="output model JSON path")
    p.add_argument("--l2", type=float, default=FUSION_DEFAULTS["l2_lambda"])
    p.add_argument("--max-iters", type=_positive_int, default=FUSION_DEFAULTS["max_iters"])
    p.add_argument("--tol", type=float, default=FUSION_DEFAULTS["tol"])
    p.add_argument("--positive-weight", type=float, default=1.0)

    p = sub.add_parser("claim-detect", help="print detected sub-sentence claims")
    _add_corpus_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--top-n", type=_positive_int, default=5)
    p.add_argument("--fusion-model")
    p.add_argument("--aggregation", choices=["max", "mean"], default="max")
    p.add_argument("--out")

    p = sub.add_parser("verify", help="verify claims against retrieved evidence")
    _add_corpus_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--top-n", type=_positive_int, default=5)
    p.add_argument("--fusion-model")
    p.add_argument("--verifier", choices=["lexical", "precomputed"], default="lexical")
    p.add_argument("--verdicts", help="verdict dump TSV (for --verifier precomputed)")
    p.add_argument("--out", help="write verdicts TSV")

    p = sub.add_parser("pipeline-run", help="run the full pipeline, write traces")
    _add_corpus_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--top-n", type=_positive_int, default=5)
    p.add_argument("--mode", choices=list(BASELINE_MODES) + ["claim-only", "concat-last2"],
                   default="eq1")
    p.add_argument("--fusion-model")
    p.add_argument("--claim-detection", action="store_true")
    p.add_argument("--verifier", choices=["lexical", "precomputed"], default="lexical")
    p.add_argument("--verdicts")
    p.add_argument("--out", required=True, help="trace JSONL output path")

    p = sub.add_parser("evaluate", help="compute metrics for a dataset")
    _add_corpus_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--top-n", type=_positive_int, default=5)
    p.add_argument("--mode", choices=list(BASELINE_MODES) + ["claim-only", "concat-last2"],
                   default="eq1")
    p.add_argument("--fusion-model")
    p.add_argument("--claim-detection", action="store_true")
    p.add_argument("--verifier", choices=["lexical", "precomputed"], default="lexical")
    p.add_argument("--verdicts")
    p.add_argument("--predictions",
                   help="verdict TSV; if given, only classification metrics are computed")

    return parser


def _load_resources(args):
    index = corpus_mod.build_index(corpus_mod.load_corpus(args.corpus))
    if args.scorer == "precomputed":
        if not args.scores:
            raise UsageError("--scorer precomputed requires --scores")
        scorer = load_precomputed_scores(args.scores)
    else:
        scorer = BM25Scorer(index)
    if args.encoder == "precomputed":
        if not args.embeddings:
            raise UsageError("--encoder precomputed requires --embeddings")
        encoder = load_precomputed_embeddings(args.embeddings)
    elif args.encoder == "hashed":
        encoder = HashedEncoder()
    else:
        encoder = TfidfEncoder(index)
    return index, scorer, encoder


def _load_verifier(args):
    if getattr(args, "verifier", "lexical") == "precomputed":
        if not args.verdicts:
            raise UsageError("--verifier precomputed requires --verdicts")
        return PrecomputedVerifier(load_verdicts(args.verdicts))
    return LexicalVerifier()


def _mode(args) -> str:
    return args.mode.replace("-", "_")


def _pipeline_config(args, use_detection=False) -> PipelineConfig:
    return PipelineConfig(
        k=args.k,
        top_n_sentences=getattr(args, "top_n", 5),
        use_fusion=bool(getattr(args, "fusion_model", None)),
        fusion_model_path=getattr(args, "fusion_model", None),
        use_claim_detection=use_detection,
        baseline_mode=_mode(args) if hasattr(args, "mode") else "eq1",
        detection_aggregation=getattr(args, "aggregation", "max"),
    )


def _resources(args, index, scorer, encoder, verifier=None) -> PipelineResources:
    fusion_model = None
    if getattr(args, "fusion_model", None):
        fusion_model = FusionModel.load(args.fusion_model)
    return PipelineResources(
        index=index, scorer=scorer, encoder=encoder,
        verifier=verifier or LexicalVerifier(), fusion_model=fusion_model,
    )


def _emit(args, payload: dict, table: str):
    print(table)
    if args.json:
        print(json.dumps(payload, ensure_ascii=False, sort_keys=True))


def cmd_index_build(args) -> int:
    index = corpus_mod.build_index(corpus_mod.load_corpus(args.corpus))
    payload = {
        "documents": index.num_docs,
        "vocabulary": len(index.inverted_index),
        "avg_doc_length": index.avg_doc_length,
    }
    _emit(args, payload,
          f"documents {index.num_docs}\nvocabulary {len(index.inverted_index)}\n"
          f"avg_doc_length {index.avg_doc_length:.4f}")
    return 0


def cmd_retrieve_docs(args) -> int:
    index, scorer, _ = _load_resources(args)
    examples = evaluation.load_dataset(args.dataset, args.dataset_format)
    mode = _mode(args)
    config = _pipeline_config(args)
    config.baseline_mode = mode
    retrieved = {}
    from dialcheck.pipeline import _retrieval_conversation

    for ex in examples:
        conv = _retrieval_conversation(ex.conversation, mode)
        retrieved[ex.example_id] = retrieve_documents(conv, scorer, args.k)
    recall = evaluation.document_recall(examples, retrieved, exclude_nei=False)
    recall_no_nei = evaluation.document_recall(examples, retrieved, exclude_nei=True)
    mean_docs, mean_ctx = average_retrieved(
        [_retrieval_conversation(ex.conversation, mode) for ex in examples], scorer, args.k
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for ex in examples:
                entries = retrieved[ex.example_id]
                fh.write(json.dumps({
                    "example_id": ex.example_id,
                    "retrieved": [
                        {"doc_id": e.doc_id, "score": e.score,
                         "rank": e.rank, "source": e.source}
                        for e in entries
                    ],
                }, ensure_ascii=False, sort_keys=True) + "\n")
    report = evaluation.MetricsReport(doc_recall=recall, doc_recall_no_nei=recall_no_nei)
    payload = report.as_dict()
    payload["mean_retrieved"] = mean_docs
    payload["mean_context_sourced"] = mean_ctx
    _emit(args, payload,
          report.table() + f"\nmean retrieved {mean_docs:.4f}"
          f"\nmean context-sourced {mean_ctx:.4f}")
    return 0


def _run_full(args, use_detection):
    index, scorer, encoder = _load_resources(args)
    verifier = _load_verifier(args)
    examples = evaluation.load_dataset(args.dataset, args.dataset_format)
    config = _pipeline_config(args, use_detection=use_detection)
    resources = _resources(args, index, scorer, encoder, verifier)
    traces = run_dataset(examples, config, resources, threads=args.threads)
    return examples, traces


def cmd_retrieve_sents(args) -> int:
    examples, traces = _run_full(args, use_detection=False)
    selected = {
        t.example_id: [c.sentence_id for c in t.selected] for t in traces
    }
    recall5 = evaluation.recall_at_k(examples, selected, k=args.top_n)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for t in traces:
                fh.write(json.dumps({
                    "example_id": t.example_id,
                    "selected": [sid.as_dict() for sid in selected[t.example_id]],
                }, ensure_ascii=False, sort_keys=True) + "\n")
    report = evaluation.MetricsReport(recall_at_5=recall5)
    _emit(args, report.as_dict(), report.table())
    return 0


def cmd_fusion_train(args) -> int:
    index, scorer, encoder = _load_resources(args)
    examples = evaluation.load_dataset(args.dataset, args.dataset_format)
    records = build_training_records(examples, index, scorer, encoder, k=args.k)
    model = train_fusion(
        records, l2_lambda=args.l2, max_iters=args.max_iters, tol=args.tol,
        seed=args.seed, positive_weight=args.positive_weight,
    )
    model.save(args.out)
    _emit(args, {"records": len(records), "weights": list(model.weights)},
          f"trained on {len(records)} records -> {args.out}")
    return 0


def cmd_claim_detect(args) -> int:
    _, traces = _run_full(args, use_detection=True)
    lines = [f"{t.example_id}\t{t.detected_claim}" for t in traces]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
    _emit(args, {t.example_id: t.detected_claim for t in traces}, "\n".join(lines))
    return 0


def cmd_verify(args) -> int:
    _, traces = _run_full(args, use_detection=False)
    verdicts = {t.example_id: t.verdict for t in traces}
    if args.out:
        write_verdicts(verdicts, args.out)
    lines = [f"{t.example_id}\t{t.verdict.label}\t{t.verdict.confidence:.4f}"
             for t in traces]
    _emit(args, {k: {"label": v.label, "confidence": v.confidence}
                 for k, v in verdicts.items()}, "\n".join(lines))
    return 0


def cmd_pipeline_run(args) -> int:
    _, traces = _run_full(args, use_detection=args.claim_detection)
    write_traces(traces, args.out)
    _emit(args, {"examples": len(traces), "out": args.out},
          f"wrote {len(traces)} traces -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    if args.predictions:
        examples = evaluation.load_dataset(args.dataset, args.dataset_format)
        predictions = load_verdicts(args.predictions)
        accuracy, macro_f1, table = evaluation.classification_metrics(examples, predictions)
        report = evaluation.MetricsReport(accuracy=accuracy, macro_f1=macro_f1,
                                          per_class=table)
        _emit(args, report.as_dict(), report.table())
        return 0
    examples, traces = _run_full(args, use_detection=args.claim_detection)
    retrieved = {t.example_id: t.retrieved for t in traces}
    selected = {t.example_id: [c.sentence_id for c in t.selected] for t in traces}
    predictions = {t.example_id: t.verdict for t in traces}
    accuracy, macro_f1, table = evaluation.classification_metrics(examples, predictions)
    report = evaluation.MetricsReport(
        doc_recall=evaluation.document_recall(examples, retrieved, exclude_nei=False),
        doc_recall_no_nei=evaluation.document_recall(examples, retrieved, exclude_nei=True),
        recall_at_5=evaluation.recall_at_k(examples, selected, k=args.top_n),
        accuracy=accuracy,
        macro_f1=macro_f1,
        per_class=table,
    )
    _emit(args, report.as_dict(), report.table())
    return 0


_COMMANDS = {
    "index-build": cmd_index_build,
    "retrieve-docs": cmd_retrieve_docs,
    "retrieve-sents": cmd_retrieve_sents,
    "fusion-train": cmd_fusion_train,
    "claim-detect": cmd_claim_detect,
    "verify": cmd_verify,
    "pipeline-run": cmd_pipeline_run,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (DialcheckError, OSError, ValueError) as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
