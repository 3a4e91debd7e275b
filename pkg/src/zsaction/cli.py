"""Command-line interface.

One executable exposes the whole pipeline::

    zsaction fixture generate --seed 1 --objects 50 --actions 20 --dim 32 \
        --videos 400 --out ws/
    zsaction affinity build --workspace ws/manifest.json --top 100 --out aff.zsem
    zsaction train-sentences --workspace ws/manifest.json --epochs 200 --lr 0.1 \
        --seed 0 --out model.zsem
    zsaction score objects --workspace ws/manifest.json --affinity aff.zsem \
        --top-objects 100 --out obj.csv
    zsaction score sentences --model model.zsem --workspace ws/manifest.json \
        --top-actions 5 --out sent.csv
    zsaction classify --workspace ws/manifest.json --model model.zsem \
        --affinity aff.zsem --mode fused --top-objects 100 --top-actions 5 \
        --out predictions.csv
    zsaction evaluate --workspace ws/manifest.json --runs 50 --unseen 10 \
        --seed 0 --mode fused --report report/

Logs go to standard error; data is written only to the declared output
paths.  Every primary output gets a ``<name>.meta.json`` sidecar echoing
the configuration.  Rerunning a subcommand with identical flags and
inputs produces byte-identical outputs.

Exit codes: 0 success, 1 unexpected error, 2 usage, 3 missing file,
4 malformed file, 5 invariant violation, 6 training divergence,
7 evaluation failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, kernels
from .affinity import (compute_affinity, load_affinity, save_affinity,
                       sidecar, sparsify_affinity)
from .config import DEFAULTS, EngineConfig
from .errors import DimensionMismatchError, EngineError, InvariantError
from .evaluation import emit_report, evaluate, generate_splits, load_split_file
from .fixture import generate_fixture
from .fusion import MODES, SparsityConfig, classify_batch
from .objects import aggregate_videos, sparsify_objects
from .sentences import (TrainConfig, load_model, predict_video, save_model,
                        sparsify_sentences, train_on_vocabulary)
from .store import load_workspace, save_workspace

log = logging.getLogger("zsaction")

_EXIT_BY_CATEGORY = {
    "format": 4,
    "invariant": 5,
    "divergence": 6,
    "evaluation": 7,
    "internal": 1,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        config_file = _load_config_file(args.config)
        cfg = _engine_config(args, config_file)
        return args.handler(args, cfg) or 0
    except FileNotFoundError as exc:
        return _fail("missing-file", exc, 3)
    except IsADirectoryError as exc:
        return _fail("missing-file", exc, 3)
    except EngineError as exc:
        return _fail(exc.category, exc, _EXIT_BY_CATEGORY.get(exc.category, 1))
    except OSError as exc:
        return _fail("io", exc, 1)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zsaction",
        description="Zero-shot action classification engine: object-affinity "
                    "and sentence classifiers with score fusion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="JSON",
                        help="config file with flag defaults; explicit flags win")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug (logs go to stderr)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    fixture = sub.add_parser("fixture", help="synthetic workspace utilities")
    fixture_sub = fixture.add_subparsers(dest="subcommand", required=True,
                                         metavar="SUBCOMMAND")
    gen = fixture_sub.add_parser("generate", parents=[common],
                                 help="generate a seeded synthetic workspace")
    gen.add_argument("--seed", type=int, help=_d("seed"))
    gen.add_argument("--objects", type=int, default=50,
                     help="object vocabulary size (default: 50)")
    gen.add_argument("--actions", type=int, default=20,
                     help="action vocabulary size (default: 20)")
    gen.add_argument("--dim", type=int, default=32,
                     help="embedding dimension (default: 32)")
    gen.add_argument("--videos", type=int, default=400,
                     help="video count (default: 400)")
    gen.add_argument("--sentences-per-class", type=int, default=10,
                     help="description sentences per action (default: 10)")
    gen.add_argument("--captions-per-video", type=int, default=3,
                     help="caption embeddings per video (default: 3)")
    gen.add_argument("--out", required=True, metavar="DIR",
                     help="output workspace directory")
    gen.set_defaults(handler=cmd_fixture_generate)

    affinity = sub.add_parser("affinity", help="object-action affinity matrix")
    affinity_sub = affinity.add_subparsers(dest="subcommand", required=True,
                                           metavar="SUBCOMMAND")
    build = affinity_sub.add_parser("build", parents=[common],
                                    help="build (and sparsify) the affinity matrix")
    build.add_argument("--workspace", required=True, metavar="MANIFEST")
    build.add_argument("--top", type=int, dest="top_affinity",
                       help="objects kept per action column "
                            f"(default: {DEFAULTS['top_affinity']}, clamped to m)")
    build.add_argument("--out", required=True, metavar="PATH")
    build.set_defaults(handler=cmd_affinity_build)

    train = sub.add_parser("train-sentences", parents=[common],
                           help="train the sentence classifier on soft-labeled "
                                "description sentences")
    train.add_argument("--workspace", required=True, metavar="MANIFEST")
    train.add_argument("--epochs", type=int, help=_d("epochs"))
    train.add_argument("--lr", type=float, dest="learning_rate",
                       help=_d("learning_rate"))
    train.add_argument("--batch", type=int, dest="batch_size", help=_d("batch_size"))
    train.add_argument("--seed", type=int, help=_d("seed"))
    train.add_argument("--out", required=True, metavar="PATH")
    train.set_defaults(handler=cmd_train_sentences)

    score = sub.add_parser("score", help="per-video pathway scores")
    score_sub = score.add_subparsers(dest="subcommand", required=True,
                                     metavar="SUBCOMMAND")
    s_obj = score_sub.add_parser("objects", parents=[common],
                                 help="object-pathway action scores per video")
    s_obj.add_argument("--workspace", required=True, metavar="MANIFEST")
    s_obj.add_argument("--affinity", required=True, metavar="PATH")
    s_obj.add_argument("--top-objects", type=int, help=_d("top_objects"))
    s_obj.add_argument("--out", required=True, metavar="CSV")
    s_obj.set_defaults(handler=cmd_score_objects)
    s_sent = score_sub.add_parser("sentences", parents=[common],
                                  help="sentence-pathway probabilities per video")
    s_sent.add_argument("--model", required=True, metavar="PATH")
    s_sent.add_argument("--workspace", required=True, metavar="MANIFEST")
    s_sent.add_argument("--top-actions", type=int, help=_d("top_actions"))
    s_sent.add_argument("--out", required=True, metavar="CSV")
    s_sent.set_defaults(handler=cmd_score_sentences)

    classify = sub.add_parser("classify", parents=[common],
                              help="classify every video in a workspace")
    classify.add_argument("--workspace", required=True, metavar="MANIFEST")
    classify.add_argument("--model", metavar="PATH",
                          help="trained sentence classifier (required unless "
                               "--mode objects)")
    classify.add_argument("--affinity", metavar="PATH",
                          help="affinity matrix file (required unless "
                               "--mode sentences)")
    classify.add_argument("--mode", choices=MODES, help=_d("mode"))
    classify.add_argument("--top-objects", type=int, help=_d("top_objects"))
    classify.add_argument("--top-actions", type=int, help=_d("top_actions"))
    classify.add_argument("--object-weight", type=float, help=_d("object_weight"))
    classify.add_argument("--out", required=True, metavar="CSV")
    classify.set_defaults(handler=cmd_classify)

    ev = sub.add_parser("evaluate", parents=[common],
                        help="repeated unseen-class split protocol")
    ev.add_argument("--workspace", required=True, metavar="MANIFEST")
    ev.add_argument("--runs", type=int, help=_d("runs"))
    ev.add_argument("--unseen", type=int,
                    help="unseen classes per run (required without --split-file)")
    ev.add_argument("--split-file", metavar="JSON",
                    help="fixed splits: JSON list of class names, or list of lists")
    ev.add_argument("--seed", type=int, help=_d("seed"))
    ev.add_argument("--mode", choices=MODES, help=_d("mode"))
    ev.add_argument("--top-objects", type=int, help=_d("top_objects"))
    ev.add_argument("--top-actions", type=int, help=_d("top_actions"))
    ev.add_argument("--top-affinity", type=int, help=_d("top_affinity"))
    ev.add_argument("--classifier-policy", choices=("retrain", "mask"),
                    dest="classifier_policy", help=_d("classifier_policy"))
    ev.add_argument("--model", metavar="PATH",
                    help="full-vocabulary model (required with "
                         "--classifier-policy mask)")
    ev.add_argument("--epochs", type=int, help=_d("epochs"))
    ev.add_argument("--lr", type=float, dest="learning_rate", help=_d("learning_rate"))
    ev.add_argument("--batch", type=int, dest="batch_size", help=_d("batch_size"))
    ev.add_argument("--object-weight", type=float, help=_d("object_weight"))
    ev.add_argument("--threads", type=int,
                    help="worker threads for runs (default: available cores)")
    ev.add_argument("--report", required=True, metavar="DIR",
                    help="directory for summary.json and per_class.csv")
    ev.set_defaults(handler=cmd_evaluate)

    return parser


def _d(key):
    return f"(default: {DEFAULTS[key]})"


def _setup_logging(verbosity):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _load_config_file(path):
    if not path:
        return {}
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise InvariantError(f"{path}: config file must be a JSON object")
    return raw


def _engine_config(args, config_file):
    values = {}
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
        elif key in config_file:
            values[key] = config_file[key]
    threads = getattr(args, "threads", None)
    if threads is None:
        threads = config_file.get("threads")
    return EngineConfig(**values, threads=threads).validate()


def _fail(category, exc, code):
    print(f"zsaction: error [{category}] {exc}", file=sys.stderr)
    return code


def _clamp(requested, limit, what):
    effective = min(requested, limit)
    if effective != requested:
        log.info("%s clamped from %d to %d (dimension limit)",
                 what, requested, effective)
    return effective


def _write_meta(out_path, payload):
    sidecar(Path(out_path)).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path, header, rows):
    import csv as _csv
    with open(path, "w", newline="") as handle:
        writer = _csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value):
    return repr(float(value))


def cmd_fixture_generate(args, cfg):
    seed = cfg.seed if args.seed is None else args.seed
    workspace = generate_fixture(seed, args.objects, args.actions, args.dim,
                                 args.videos,
                                 sentences_per_class=args.sentences_per_class,
                                 captions_per_video=args.captions_per_video)
    manifest = save_workspace(workspace, args.out)
    _write_meta(manifest, {
        "command": "fixture generate",
        "seed": seed,
        "objects": args.objects,
        "actions": args.actions,
        "dim": args.dim,
        "videos": args.videos,
        "sentences_per_class": args.sentences_per_class,
        "captions_per_video": args.captions_per_video,
        "backend": kernels.active_backend(),
        "version": __version__,
    })
    log.info("workspace written: %s", manifest)
    return 0


def cmd_affinity_build(args, cfg):
    workspace = load_workspace(args.workspace)
    affinity = compute_affinity(workspace.object_vocab, workspace.action_vocab)
    top = _clamp(cfg.top_affinity, workspace.object_count, "top_affinity")
    affinity = sparsify_affinity(affinity, top)
    save_affinity(affinity, args.out, extra_meta={
        "config": cfg.echo(command="affinity build", workspace=args.workspace,
                           effective_top_affinity=top,
                           backend=kernels.active_backend(), version=__version__),
    })
    log.info("affinity written: %s (%d x %d, top=%d)", args.out,
             affinity.object_count, affinity.action_count, top)
    return 0


def cmd_train_sentences(args, cfg):
    workspace = load_workspace(args.workspace)
    train_config = TrainConfig(cfg.epochs, cfg.learning_rate, cfg.batch_size,
                               cfg.seed)
    classifier = train_on_vocabulary(workspace.action_vocab, train_config)
    save_model(classifier, args.out, extra_meta={
        "config": cfg.echo(command="train-sentences", workspace=args.workspace,
                           backend=kernels.active_backend(), version=__version__),
    })
    log.info("model written: %s (loss %.6f -> %.6f, accuracy %.4f)", args.out,
             classifier.training_meta["initial_loss"],
             classifier.training_meta["final_loss"],
             classifier.training_meta["final_accuracy"])
    return 0


def cmd_score_objects(args, cfg):
    workspace = load_workspace(args.workspace)
    affinity = load_affinity(args.affinity)
    _check_affinity(affinity, workspace)
    top = _clamp(cfg.top_objects, workspace.object_count, "top_objects")
    probs = sparsify_objects(aggregate_videos(workspace.videos), top)
    scores = probs @ affinity.values
    header = ["video_id"] + list(workspace.action_vocab.labels)
    rows = [[video.video_id] + [_fmt(s) for s in scores[i]]
            for i, video in enumerate(workspace.videos)]
    _write_csv(args.out, header, rows)
    _write_meta(args.out, {
        "config": cfg.echo(command="score objects", workspace=args.workspace,
                           affinity=args.affinity, effective_top_objects=top,
                           backend=kernels.active_backend(), version=__version__),
    })
    log.info("object scores written: %s (%d videos)", args.out, len(rows))
    return 0


def cmd_score_sentences(args, cfg):
    workspace = load_workspace(args.workspace)
    model = load_model(args.model)
    _check_model(model, workspace)
    top = _clamp(cfg.top_actions, workspace.action_count, "top_actions")
    header = ["video_id"] + list(workspace.action_vocab.labels)
    rows = []
    for video in workspace.videos:
        probs = sparsify_sentences(predict_video(model, video.caption_embeddings),
                                   top)
        rows.append([video.video_id] + [_fmt(p) for p in probs])
    _write_csv(args.out, header, rows)
    _write_meta(args.out, {
        "config": cfg.echo(command="score sentences", workspace=args.workspace,
                           model=args.model, effective_top_actions=top,
                           backend=kernels.active_backend(), version=__version__),
    })
    log.info("sentence scores written: %s (%d videos)", args.out, len(rows))
    return 0


def cmd_classify(args, cfg):
    workspace = load_workspace(args.workspace)
    model = None
    affinity = None
    if cfg.mode != "objects":
        if not args.model:
            raise InvariantError(f"mode {cfg.mode!r} requires --model")
        model = load_model(args.model)
        _check_model(model, workspace)
    if cfg.mode != "sentences":
        if not args.affinity:
            raise InvariantError(f"mode {cfg.mode!r} requires --affinity")
        affinity = load_affinity(args.affinity)
        _check_affinity(affinity, workspace)
    else:
        affinity = compute_affinity(workspace.object_vocab, workspace.action_vocab)
    sparsity = SparsityConfig(cfg.top_objects, cfg.top_actions, None)
    predictions = classify_batch(workspace, model, affinity, sparsity, cfg.mode,
                                 object_weight=cfg.object_weight)
    labels = workspace.action_vocab.labels
    header = ["video_id", "true_label", "predicted_label"] + list(labels)
    rows = []
    for pred in predictions:
        true = "" if pred.true_class is None else labels[pred.true_class]
        rows.append([pred.video_id, true, labels[pred.predicted_class]]
                    + [_fmt(s) for s in pred.scores])
    _write_csv(args.out, header, rows)
    _write_meta(args.out, {
        "config": cfg.echo(command="classify", workspace=args.workspace,
                           model=args.model, affinity=args.affinity,
                           backend=kernels.active_backend(), version=__version__),
    })
    correct = [p for p in predictions
               if p.true_class is not None and p.predicted_class == p.true_class]
    labeled = [p for p in predictions if p.true_class is not None]
    if labeled:
        log.info("classified %d videos, accuracy %.4f on %d labeled",
                 len(predictions), len(correct) / len(labeled), len(labeled))
    return 0


def cmd_evaluate(args, cfg):
    workspace = load_workspace(args.workspace)
    n_total = workspace.action_count
    if args.split_file:
        splits = load_split_file(args.split_file, workspace.action_vocab.labels)
        unseen_echo = sorted({len(s.unseen_class_indices) for s in splits})
    else:
        if args.unseen is None:
            raise InvariantError("evaluate requires --unseen or --split-file")
        splits = generate_splits(n_total, args.unseen, cfg.runs, cfg.seed)
        unseen_echo = [args.unseen]
    model = None
    if cfg.classifier_policy == "mask" and cfg.mode != "objects":
        if not args.model:
            raise InvariantError("--classifier-policy mask requires --model")
        model = load_model(args.model)
        _check_model(model, workspace)
    sparsity = SparsityConfig(cfg.top_objects, cfg.top_actions, cfg.top_affinity)
    train_config = TrainConfig(cfg.epochs, cfg.learning_rate, cfg.batch_size,
                               cfg.seed)
    stats = evaluate(workspace, splits, mode=cfg.mode, sparsity=sparsity,
                     train_config=train_config,
                     classifier_policy=cfg.classifier_policy, model=model,
                     threads=cfg.worker_count, object_weight=cfg.object_weight)
    echo = cfg.echo(command="evaluate", workspace=args.workspace,
                    unseen=unseen_echo, split_file=args.split_file,
                    backend=kernels.active_backend(), version=__version__)
    summary_path, csv_path = emit_report(stats, args.report, echo)
    log.info("report written: %s, %s (mean %.4f +/- %.4f over %d runs)",
             summary_path, csv_path, stats.mean, stats.stddev,
             len(stats.per_run_accuracy))
    return 0


def _check_affinity(affinity, workspace):
    if affinity.object_count != workspace.object_count:
        raise DimensionMismatchError(
            f"affinity has {affinity.object_count} object rows but the "
            f"workspace has {workspace.object_count} object classes")
    if affinity.action_count != workspace.action_count:
        raise DimensionMismatchError(
            f"affinity has {affinity.action_count} action columns but the "
            f"workspace has {workspace.action_count} action classes")


def _check_model(model, workspace):
    if model.dim != workspace.dim:
        raise DimensionMismatchError(
            f"model expects embedding dimension {model.dim} but the workspace "
            f"declares {workspace.dim}")
    if model.class_count != workspace.action_count:
        raise DimensionMismatchError(
            f"model has {model.class_count} classes but the workspace has "
            f"{workspace.action_count} action classes")


if __name__ == "__main__":
    sys.exit(main())
