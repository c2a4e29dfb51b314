"""Command line for the embedding exporter."""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderLoadError
from .exporter import POOLINGS, ExportError, ExportJob, embed_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sarquant-embed",
        description="Export sentence embeddings for the sarquant feature pipeline.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--in", dest="infile", required=True,
                        help="sentences JSON Lines file (needs id + text)")
    parser.add_argument("--out", dest="outfile", required=True,
                        help="embeddings output file")
    parser.add_argument("--encoder", default="hashed:64",
                        help="encoder id: hashed:<dim> or hf:<model>")
    parser.add_argument("--pooling", choices=POOLINGS, default="mean",
                        help="token-to-sentence pooling")
    parser.add_argument("--batch", type=int, default=32, help="encoder batch size")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            input_path=args.infile,
            output_path=args.outfile,
            encoder=args.encoder,
            pooling=args.pooling,
            batch_size=args.batch,
        )
        count = embed_file(job)
    except (ExportError, EncoderLoadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {count} embeddings -> {args.outfile}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
