"""tigerextract command line: ``extract`` and ``fixtures``."""

import argparse
import json
import sys
from pathlib import Path

from .fixtures import make_fixtures


def cmd_extract(args) -> int:
    from .encoders import CheckpointError, load_checkpoint
    from .extract import (
        ExtractionJob,
        discover_feature_files,
        extract_regions,
        extract_words,
        load_caption_file,
    )

    if not args.images and not args.captions:
        print("error: nothing to do; pass --images and/or --captions", file=sys.stderr)
        return 1
    try:
        encoders = load_checkpoint(args.checkpoint, vocab_path=args.vocab)
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    feature_files = {}
    if args.images:
        feature_files = discover_feature_files(args.images)
        if not feature_files:
            print(
                f"error: no .npy region-feature files under {args.images}; this "
                "tool consumes precomputed bottom-up detector features "
                "(36 x img_dim per image), it does not run the detector",
                file=sys.stderr,
            )
            return 1
    captions = {}
    if args.captions:
        try:
            captions = load_caption_file(args.captions)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1

    try:
        job = ExtractionJob(
            output_dir=Path(args.out), feature_files=feature_files, captions=captions
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    summary = {"out": args.out, "d": encoders.d, "errors": []}
    try:
        if feature_files:
            regions = extract_regions(job, encoders)
            summary["images_written"] = len(regions.written)
            summary["errors"].extend(regions.errors)
        if captions:
            words = extract_words(job, encoders)
            summary["captions_written"] = len(words.written)
            summary["errors"].extend(words.errors)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, sort_keys=True))
    for item in summary["errors"]:
        print(f"warning: skipped {item}", file=sys.stderr)
    return 0


def cmd_fixtures(args) -> int:
    try:
        summary = make_fixtures(
            seed=args.seed, n=args.regions, m=args.words, d=args.dim,
            count=args.instances, out_dir=args.out,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tigerextract",
        description="Export caption/region embedding tensors for the scoring package",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="encode features/captions with a checkpoint")
    p.add_argument("--images", help="directory of precomputed region features (<image_id>.npy, 36 x img_dim)")
    p.add_argument("--captions", help="JSONL file of {caption_id, text} records")
    p.add_argument("--checkpoint", required=True, help="pretrained grounding checkpoint (.pth)")
    p.add_argument("--vocab", help="vocabulary JSON (word -> index) if not embedded in the checkpoint")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fixtures", help="generate a synthetic desk-scale bundle")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--instances", type=int, default=8)
    p.add_argument("--regions", type=int, default=6, help="regions per image (n)")
    p.add_argument("--words", type=int, default=5, help="max words per caption (m)")
    p.add_argument("--dim", type=int, default=8, help="embedding dimension (d <= 16)")
    p.set_defaults(func=cmd_fixtures)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
