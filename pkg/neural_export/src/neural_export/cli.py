from __future__ import annotations

import argparse
import sys

from .errors import ExportError, UsageError
from .jobs import KINDS, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neural-export",
        description="Export model outputs into dialcheck replay files.",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--model", required=True, help="model identifier")
    parser.add_argument("--dataset", required=True, help="dataset JSONL path")
    parser.add_argument("--corpus", required=True, help="corpus JSONL path")
    parser.add_argument("--out", required=True, help="output TSV path")
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        job = ExportJob(
            dataset_path=args.dataset,
            corpus_path=args.corpus,
            out_path=args.out,
            kind=args.kind,
            model_id=args.model,
            batch_size=args.batch_size,
        )
        rows = export(job)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {rows} rows to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
