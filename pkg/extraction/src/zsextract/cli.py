"""Command line for extraction jobs.

``zsextract run`` mirrors the job fields: a video list, provider
identifiers for the object model / sentence embedder / caption models,
the output directory, and the frame sampling rate::

    zsextract run --videos clips/ --object-labels objects.txt \
        --action-sentences sentences.json --definitions defs.json \
        --labels labels.json --recognizer frame-stats --embedder hash:32 \
        --captioners template:a,template:b --rate 1.0 --out-dir ws/

Provider identifiers:

* recognizer: ``frame-stats`` (deterministic reference) or
  ``torchvision:<model>`` (pretrained, needs weights)
* embedder: ``hash:<dim>`` (deterministic reference) or
  ``sentence-transformers:<model>``
* captioners: comma-separated ``template:<name>`` / ``silent:<name>``
  entries; real captioning models plug in through the same adapter shape
* definitions: a JSON file of label -> sense(s) (first sense wins, an
  optional ``--sense-overrides`` JSON picks others), or ``wordnet``
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .adapters import (FrameStatRecognizer, HashingSentenceEmbedder,
                       SilentCaptioner, StaticDefinitionSource,
                       TemplateCaptioner)
from .formats import ExtractionError
from .jobs import ExtractionJob, run_job

VIDEO_SUFFIXES = (".avi", ".mp4", ".mkv", ".mov", ".webm")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
                        level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return run(args) or 0
    except FileNotFoundError as exc:
        print(f"zsextract: error [missing-file] {exc}", file=sys.stderr)
        return 3
    except ExtractionError as exc:
        print(f"zsextract: error [extraction] {exc}", file=sys.stderr)
        return 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zsextract",
        description="Produce zsaction workspace files from videos and "
                    "vocabularies via pluggable pretrained-model adapters.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    run_p = sub.add_parser("run", help="full extraction job -> manifest")
    run_p.add_argument("--videos", required=True,
                       help="video directory, or JSON {video_id: path}")
    run_p.add_argument("--object-labels", required=True,
                       help="text file with one object label per line")
    run_p.add_argument("--action-sentences", required=True,
                       help="JSON {action_label: [sentence, ...]}")
    run_p.add_argument("--definitions", default=None,
                       help="JSON {label: sense or [senses]}; 'wordnet' to "
                            "use the lexical database; omit to fall back to "
                            "label text")
    run_p.add_argument("--sense-overrides", default=None,
                       help="JSON {label: sense index}")
    run_p.add_argument("--labels", default=None,
                       help="JSON {video_id: action_label} of true labels")
    run_p.add_argument("--recognizer", default="frame-stats",
                       help="object model id (default: frame-stats)")
    run_p.add_argument("--embedder", default="hash:32",
                       help="sentence embedder id (default: hash:32)")
    run_p.add_argument("--captioners", default="template:observer",
                       help="comma-separated caption provider ids "
                            "(default: template:observer)")
    run_p.add_argument("--rate", type=float, default=1.0,
                       help="frame samples per second (default: 1.0)")
    run_p.add_argument("--workers", type=int, default=4,
                       help="parallel videos (default: 4)")
    run_p.add_argument("--overwrite", action="store_true",
                       help="regenerate files that already exist")
    run_p.add_argument("--out-dir", required=True, metavar="DIR")
    run_p.add_argument("-v", "--verbose", action="store_true")
    run_p.set_defaults(handler=cmd_run)
    return parser


def run(args):
    return args.handler(args)


def cmd_run(args):
    videos = load_videos(args.videos)
    object_labels = [line.strip() for line in
                     Path(args.object_labels).read_text().splitlines()
                     if line.strip()]
    action_sentences = json.loads(Path(args.action_sentences).read_text())
    video_labels = (json.loads(Path(args.labels).read_text())
                    if args.labels else {})
    job = ExtractionJob(videos=videos, object_labels=object_labels,
                        action_sentences=action_sentences,
                        out_dir=Path(args.out_dir), frame_rate=args.rate,
                        video_labels=video_labels, workers=args.workers,
                        overwrite=args.overwrite)
    embedder = make_embedder(args.embedder)
    recognizer = make_recognizer(args.recognizer, object_labels)
    overrides = (json.loads(Path(args.sense_overrides).read_text())
                 if args.sense_overrides else None)
    definitions = make_definition_source(args.definitions, overrides)
    captioners = [make_captioner(spec) for spec in args.captioners.split(",")]
    manifest_path, logit_results, _ = run_job(job, recognizer, definitions,
                                              embedder, captioners)
    failed = [r.video_id for r in logit_results.values() if r.path is None]
    logging.getLogger("zsextract").info(
        "manifest written: %s (%d videos, %d skipped)", manifest_path,
        len(videos) - len(failed), len(failed))
    return 0


def load_videos(spec):
    path = Path(spec)
    if path.is_dir():
        found = sorted(p for p in path.iterdir()
                       if p.suffix.lower() in VIDEO_SUFFIXES)
        if not found:
            raise ExtractionError(f"no video files under {path}")
        return {p.stem: p for p in found}
    mapping = json.loads(path.read_text())
    return {vid: Path(p) for vid, p in mapping.items()}


def make_embedder(spec):
    kind, _, arg = spec.partition(":")
    if kind == "hash":
        return HashingSentenceEmbedder(int(arg or 32))
    if kind == "sentence-transformers":
        from .adapters import SentenceTransformerEmbedder
        return SentenceTransformerEmbedder(arg) if arg else SentenceTransformerEmbedder()
    raise ExtractionError(f"unknown embedder {spec!r}")


def make_recognizer(spec, labels):
    kind, _, arg = spec.partition(":")
    if kind == "frame-stats":
        return FrameStatRecognizer(labels)
    if kind == "torchvision":
        from .adapters import TorchvisionRecognizer
        return TorchvisionRecognizer(arg or "resnet152")
    raise ExtractionError(f"unknown recognizer {spec!r}")


def make_captioner(spec):
    kind, _, arg = spec.strip().partition(":")
    if kind == "template":
        return TemplateCaptioner(arg or "template")
    if kind == "silent":
        return SilentCaptioner(arg or "silent")
    raise ExtractionError(f"unknown caption provider {spec!r}")


def make_definition_source(spec, overrides):
    if spec is None:
        return StaticDefinitionSource({}, overrides)
    if spec == "wordnet":
        from .adapters import WordNetDefinitionSource
        return WordNetDefinitionSource(overrides)
    senses = json.loads(Path(spec).read_text())
    return StaticDefinitionSource(senses, overrides)


if __name__ == "__main__":
    sys.exit(main())
