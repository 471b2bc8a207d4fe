"""Command line entry point: chunk dump in, weight file out."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dump_io import DumpError, parse_dump
from .encoder import LOCAL_MODEL, EncoderError, make_encoder
from .scorer import render_weight_file, weigh_corpus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weigh",
        description="Score chunk-level edits by embedding similarity gain "
        "and emit a weight file for the evaluator.",
    )
    parser.add_argument("--chunks", required=True, help="chunk dump file")
    parser.add_argument("--out", required=True, help="weight file to write")
    parser.add_argument(
        "--model",
        default=LOCAL_MODEL,
        help="'local' (deterministic built-in encoder) or a path to a "
        "transformers checkpoint directory",
    )
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.batch_size < 1:
        print("error: --batch-size must be >= 1", file=sys.stderr)
        return 2
    try:
        encoder = make_encoder(args.model)
    except EncoderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        text = Path(args.chunks).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {args.chunks}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    try:
        sentences = parse_dump(text, path=args.chunks)
    except DumpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    edits = weigh_corpus(sentences, encoder, batch_size=args.batch_size)
    Path(args.out).write_text(
        render_weight_file(edits, args.model), encoding="utf-8"
    )
    print(f"{args.out}: {len(edits)} weights from {len(sentences)} sentences")
    return 0


if __name__ == "__main__":
    sys.exit(main())
