"""Evaluation protocols: repeated random unseen-class splits and reports.

Each run draws (or is given) a set of unseen action classes, restricts
the engine to them, classifies every video whose true label is in the
set, and records overall and per-class accuracy.  No class outside the
run's unseen set can ever be predicted.  Runs are independent: they may
execute on a thread pool, and the aggregated statistics are identical
for any worker count.

The sentence classifier's softmax ranges over the run's unseen classes,
so by default it is retrained per run on the restriction of the
soft-labeled sentence set (with a run-derived seed).  The alternative
``mask`` policy reuses one model trained over all classes and restricts
its softmax to the run's columns.
"""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels, objects, sentences
from .affinity import compute_affinity, restrict_affinity, sparsify_affinity
from .errors import EngineError, EvaluationError, InvariantError
from .fusion import MODES, SparsityConfig
from .sentences import TrainConfig


@dataclass(frozen=True)
class SplitSpec:
    """One run's unseen-class subset."""

    unseen_class_indices: tuple
    seed: int
    run_index: int


@dataclass
class RunStatistics:
    """Accuracy aggregates over repeated runs.

    ``per_class`` maps a global class index to (run_index, accuracy)
    pairs recorded only for runs where that class was unseen and had at
    least one video.  ``stddev`` is the population standard deviation of
    the per-run accuracies.
    """

    per_run_accuracy: list
    mean: float
    stddev: float
    per_class: dict
    class_labels: list
    predictions: Optional[list] = None  # per run: list of (video_id, true, predicted)


def generate_splits(n_total, n_unseen, runs, seed):
    """Sample ``runs`` unseen-class subsets of size ``n_unseen``.

    Run r draws uniformly without replacement from its own stream seeded
    with ``seed + r``, so split lists are reproducible and independent of
    execution order.
    """
    if not 1 <= n_unseen <= n_total:
        raise InvariantError(
            f"n_unseen must be in [1, {n_total}] (total classes), got {n_unseen}")
    if runs < 1:
        raise InvariantError(f"runs must be >= 1, got {runs}")
    splits = []
    for r in range(runs):
        rng = np.random.default_rng(seed + r)
        chosen = np.sort(rng.choice(n_total, size=n_unseen, replace=False))
        splits.append(SplitSpec(tuple(int(c) for c in chosen), seed, r))
    return splits


def load_split_file(path, action_labels):
    """Read fixed splits (one JSON list of class names, or a list of lists).

    Class names are resolved against the workspace's action labels;
    unknown names are an error.
    """
    raw = json.loads(Path(path).read_text())
    if isinstance(raw, list) and raw and all(isinstance(x, str) for x in raw):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        raise InvariantError(
            f"{path}: split file must be a JSON list of class names or a "
            f"list of such lists")
    index = {label: i for i, label in enumerate(action_labels)}
    splits = []
    for r, names in enumerate(raw):
        unseen = []
        for name in names:
            if name not in index:
                raise InvariantError(
                    f"{path}: split {r} names unknown action class {name!r}")
            unseen.append(index[name])
        if not unseen:
            raise InvariantError(f"{path}: split {r} is empty")
        if len(set(unseen)) != len(unseen):
            raise InvariantError(f"{path}: split {r} repeats a class")
        splits.append(SplitSpec(tuple(sorted(unseen)), 0, r))
    return splits


def evaluate(workspace, splits, *, mode="fused", sparsity=None,
             train_config=None, classifier_policy="retrain", model=None,
             affinity=None, threads=1, object_weight=1.0,
             keep_predictions=False):
    """Run the split protocol and aggregate accuracy statistics.

    ``classifier_policy`` is ``retrain`` (fit the sentence classifier on
    each run's unseen classes, seeded per run) or ``mask`` (restrict the
    softmax of the supplied full-vocabulary ``model``).  Sparsity
    thresholds are clamped to each run's dimensions.  Any run failure
    aborts the evaluation, naming the run and cause.
    """
    if mode not in MODES:
        raise InvariantError(f"mode must be one of {MODES}, got {mode!r}")
    if classifier_policy not in ("retrain", "mask"):
        raise InvariantError(
            f"classifier_policy must be 'retrain' or 'mask', got {classifier_policy!r}")
    needs_sentences = mode != "objects"
    if needs_sentences and classifier_policy == "mask" and model is None:
        raise InvariantError("classifier_policy 'mask' requires a trained model")
    if not splits:
        raise InvariantError("at least one split is required")
    sparsity = sparsity or SparsityConfig()
    train_config = train_config or TrainConfig()
    n_total = workspace.action_count
    for split in splits:
        bad = [c for c in split.unseen_class_indices if not 0 <= c < n_total]
        if bad:
            raise InvariantError(
                f"split {split.run_index} names class index {bad[0]} outside "
                f"[0, {n_total})")

    if affinity is None:
        affinity = compute_affinity(workspace.object_vocab, workspace.action_vocab)

    # Run-independent quantities, computed once.
    true_labels = np.array(
        [-1 if v.true_label is None else v.true_label for v in workspace.videos],
        dtype=np.int64)
    object_probs = objects.aggregate_videos(workspace.videos)
    if sparsity.top_objects is not None:
        object_probs = objects.sparsify_objects(
            object_probs, min(sparsity.top_objects, workspace.object_count))
    caption_counts = [v.caption_embeddings.shape[0] for v in workspace.videos]
    with_captions = [i for i, k in enumerate(caption_counts) if k > 0]
    caption_rows = (np.concatenate(
        [np.asarray(workspace.videos[i].caption_embeddings, dtype=np.float64)
         for i in with_captions])
        if with_captions else np.zeros((0, workspace.dim)))
    masked_hidden = None
    if needs_sentences and classifier_policy == "mask" and caption_rows.shape[0]:
        masked_hidden = kernels.gelu(caption_rows @ model.weights + model.bias)
    sentence_x = np.asarray(workspace.action_vocab.sentence_embeddings,
                            dtype=np.float64)
    sentence_y = np.asarray(workspace.action_vocab.sentence_class_index,
                            dtype=np.int64)

    def run_one(split):
        unseen = np.array(split.unseen_class_indices, dtype=np.int64)
        n_unseen = unseen.size
        sub_affinity = restrict_affinity(affinity, unseen)
        if sparsity.top_affinity is not None:
            sub_affinity = sparsify_affinity(
                sub_affinity, min(sparsity.top_affinity, workspace.object_count))

        sentence_rows = None
        if needs_sentences:
            sentence_rows = _run_sentence_probs(
                split, unseen, caption_counts, with_captions, caption_rows,
                masked_hidden, sentence_x, sentence_y, classifier_policy,
                model, train_config, len(workspace.videos))
            if sparsity.top_actions is not None:
                sentence_rows = sentences.sparsify_sentences(
                    sentence_rows, min(sparsity.top_actions, n_unseen))

        if mode == "sentences":
            scores = sentence_rows
        else:
            object_term = object_weight * (object_probs @ sub_affinity.values)
            scores = object_term if mode == "objects" else sentence_rows + object_term

        predicted = unseen[np.argmax(scores, axis=1)]
        eligible = np.isin(true_labels, unseen) & (true_labels >= 0)
        if not eligible.any():
            raise EvaluationError(
                split.run_index, "no video has a true label in the unseen set")
        correct = predicted[eligible] == true_labels[eligible]
        accuracy = float(np.mean(correct))
        per_class = {}
        for cls in unseen:
            cls_mask = eligible & (true_labels == cls)
            if cls_mask.any():
                per_class[int(cls)] = float(
                    np.mean(predicted[cls_mask] == true_labels[cls_mask]))
        preds = None
        if keep_predictions:
            preds = [
                (workspace.videos[i].video_id, int(true_labels[i]), int(predicted[i]))
                for i in np.flatnonzero(eligible)
            ]
        return accuracy, per_class, preds

    def guarded(split):
        try:
            return run_one(split)
        except EvaluationError:
            raise
        except EngineError as exc:
            raise EvaluationError(split.run_index, exc) from exc

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(guarded, splits))
    else:
        results = [guarded(split) for split in splits]

    per_run = [acc for acc, _, _ in results]
    per_class = {}
    for split, (_, run_classes, _) in zip(splits, results):
        for cls, acc in run_classes.items():
            per_class.setdefault(cls, []).append((split.run_index, acc))
    stats = RunStatistics(
        per_run_accuracy=per_run,
        mean=float(np.mean(per_run)),
        stddev=float(np.std(per_run)),
        per_class=per_class,
        class_labels=list(workspace.action_vocab.labels),
        predictions=[preds for _, _, preds in results] if keep_predictions else None,
    )
    return stats


def _run_sentence_probs(split, unseen, caption_counts, with_captions,
                        caption_rows, masked_hidden, sentence_x, sentence_y,
                        policy, model, train_config, video_count):
    """Per-video sentence probabilities over the run's unseen classes."""
    n_unseen = unseen.size
    rows = np.full((video_count, n_unseen), 1.0 / n_unseen)
    if not with_captions:
        return rows
    if policy == "retrain":
        keep = np.isin(sentence_y, unseen)
        remap = np.zeros(int(unseen.max()) + 1, dtype=np.int64)
        remap[unseen] = np.arange(n_unseen)
        run_seed = int(np.random.SeedSequence(
            (split.seed, split.run_index)).generate_state(1)[0])
        config = TrainConfig(train_config.epochs, train_config.learning_rate,
                             train_config.batch_size, run_seed)
        clf = sentences.train(sentence_x[keep], remap[sentence_y[keep]],
                              n_unseen, config)
        probs = kernels.forward_probs(caption_rows, clf.weights, clf.bias)
    else:
        # softmax restricted to the unseen columns of the full model
        probs = kernels.softmax_rows(
            np.ascontiguousarray(masked_hidden[:, unseen]))
    start = 0
    for i in with_captions:
        rows[i] = probs[start:start + caption_counts[i]].mean(axis=0)
        start += caption_counts[i]
    return rows


def emit_report(stats, report_dir, config_echo=None):
    """Write ``summary.json`` and ``per_class.csv`` under ``report_dir``.

    The JSON carries mean, stddev, the per-run accuracies and the config
    echo; the CSV has one (class, run, accuracy) row per per-class entry,
    sorted by class index then run.  Output bytes are a pure function of
    the inputs.
    """
    report_dir = Path(report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "runs": len(stats.per_run_accuracy),
        "mean_accuracy": stats.mean,
        "stddev_accuracy": stats.stddev,
        "per_run_accuracy": stats.per_run_accuracy,
        "config": config_echo or {},
    }
    summary_path = report_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    csv_path = report_dir / "per_class.csv"
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["class", "run", "accuracy"])
        for cls in sorted(stats.per_class):
            label = stats.class_labels[cls]
            for run_index, acc in sorted(stats.per_class[cls]):
                writer.writerow([label, run_index, repr(acc)])
    return summary_path, csv_path
