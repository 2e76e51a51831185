"""Command-line front end: extract logits, convert annotated datasets."""

import argparse
import glob
import logging
import os
import sys

from .errors import ExtractionError
from .extract import ExtractionJob, extract_logits
from .speechocean import convert_speechocean

log = logging.getLogger("gopl_extractor")


def cmd_extract(args) -> int:
    pattern = os.path.join(args.audio_dir, "**", "*.wav")
    paths = tuple(sorted(glob.glob(pattern, recursive=True)))
    if not paths:
        raise ExtractionError(f"no .wav files under {args.audio_dir}")
    job = ExtractionJob(
        audio_paths=paths,
        model_identifier=args.model,
        output_dir=args.out,
    )
    fragment = extract_logits(job)
    log.info("wrote %d tensors and %s", len(paths), fragment)
    return 0


def cmd_convert_speechocean(args) -> int:
    stats = convert_speechocean(
        root=args.root,
        fragment_path=args.extraction,
        out_path=args.out,
        phone_map_path=args.phone_map,
    )
    log.info("manifest written to %s (%s)", args.out, stats)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gopl-extractor",
        description="Acoustic-model logit extraction and dataset conversion",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="run the model over a directory of wavs")
    ex.add_argument("--audio-dir", required=True)
    ex.add_argument("--model", required=True,
                    help="checkpoint directory or hub identifier")
    ex.add_argument("--out", required=True, help="output directory")
    ex.set_defaults(fn=cmd_extract)

    co = sub.add_parser(
        "convert-speechocean",
        help="turn a phoneme-scored annotation tree into a corpus manifest",
    )
    co.add_argument("--root", required=True, help="dataset root directory")
    co.add_argument("--extraction", required=True,
                    help="extraction fragment from the extract step")
    co.add_argument("--out", required=True, help="manifest path to write")
    co.add_argument("--phone-map", default=None,
                    help="JSON phone table (default: packaged ARPABET map)")
    co.set_defaults(fn=cmd_convert_speechocean)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ExtractionError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
