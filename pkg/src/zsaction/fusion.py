"""Score fusion: combine the sentence and object pathways per video.

The fused score of action z is the sentence probability plus the
object-affinity score; the predicted class is the argmax with ties
broken toward the lower class index.  Ablation modes keep a single
pathway.  Fused scores equal the elementwise sum of the two ablation
modes' scores exactly.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import objects, sentences
from .affinity import sparsify_affinity
from .errors import DimensionMismatchError, InvariantError

MODES = ("objects", "sentences", "fused")


@dataclass(frozen=True)
class SparsityConfig:
    """Top-k thresholds for the three sparsified quantities.

    ``top_objects`` keeps the strongest object probabilities per video,
    ``top_actions`` the strongest sentence probabilities per video, and
    ``top_affinity`` the strongest objects per action column.  ``None``
    leaves the corresponding quantity dense (or, for the affinity, as
    loaded).
    """

    top_objects: Optional[int] = None
    top_actions: Optional[int] = None
    top_affinity: Optional[int] = None

    def clamped(self, object_count, action_count):
        """Resolve thresholds against actual dimensions (top > dim keeps all)."""
        return SparsityConfig(
            None if self.top_objects is None else min(self.top_objects, object_count),
            None if self.top_actions is None else min(self.top_actions, action_count),
            None if self.top_affinity is None else min(self.top_affinity, object_count),
        )


@dataclass(frozen=True)
class Prediction:
    """Scores and decision for one video under one mode."""

    video_id: str
    mode: str
    scores: np.ndarray  # (n,) float64
    predicted_class: int
    true_class: Optional[int] = None


def classify(sentence_probs, object_probs, affinity, mode="fused", *,
             video_id="", true_class=None, object_weight=1.0):
    """Combine (already sparsified or dense) pathway scores for one video.

    * objects:   scores = object_weight * (p_objects @ affinity)
    * sentences: scores = p_sentences
    * fused:     elementwise sum of the two
    """
    _check_mode(mode)
    n = affinity.action_count
    scores = np.zeros(n)
    if mode in ("sentences", "fused"):
        p_s = np.asarray(sentence_probs, dtype=np.float64)
        if p_s.shape != (n,):
            raise DimensionMismatchError(
                f"sentence probabilities have shape {p_s.shape} but the affinity "
                f"matrix has {n} action columns")
        scores = scores + p_s
    if mode in ("objects", "fused"):
        term = object_weight * objects.object_action_scores(object_probs, affinity)
        scores = scores + term
    return Prediction(video_id, mode, scores, int(np.argmax(scores)), true_class)


def classify_batch(workspace, model, affinity, sparsity=None, mode="fused", *,
                   object_weight=1.0):
    """Sparsify and classify every video in the workspace.

    Applies the affinity, object and sentence top-k thresholds from
    ``sparsity`` (clamped to the workspace dimensions), then scores each
    video under ``mode``.  Deterministic and order-preserving.
    """
    _check_mode(mode)
    sparsity = (sparsity or SparsityConfig()).clamped(
        workspace.object_count, workspace.action_count)
    if not workspace.videos:
        return []
    if model is not None and model.class_count != workspace.action_count:
        raise DimensionMismatchError(
            f"model has {model.class_count} classes but the workspace has "
            f"{workspace.action_count} action classes")
    if sparsity.top_affinity is not None:
        affinity = sparsify_affinity(affinity, sparsity.top_affinity)

    object_probs = objects.aggregate_videos(workspace.videos)
    if sparsity.top_objects is not None:
        object_probs = objects.sparsify_objects(object_probs, sparsity.top_objects)
    sentence_probs = _video_sentence_probs(workspace, model, mode)
    if sentence_probs is not None and sparsity.top_actions is not None:
        sentence_probs = sentences.sparsify_sentences(sentence_probs,
                                                      sparsity.top_actions)
    # one pass per pathway, then fuse
    n = workspace.action_count
    object_term = None
    if mode in ("objects", "fused"):
        object_term = object_weight * objects.object_action_scores(object_probs,
                                                                   affinity)
    if mode == "objects":
        score_rows = object_term
    elif mode == "sentences":
        score_rows = sentence_probs
    else:
        score_rows = sentence_probs + object_term
    predicted = np.argmax(score_rows, axis=1)
    return [
        Prediction(video.video_id, mode, score_rows[i], int(predicted[i]),
                   video.true_label)
        for i, video in enumerate(workspace.videos)
    ]


def _video_sentence_probs(workspace, model, mode):
    """Per-video mean caption probabilities as a (videos, n) matrix."""
    if mode == "objects":
        return None
    if model is None:
        raise InvariantError(f"mode {mode!r} requires a trained sentence classifier")
    counts = [v.caption_embeddings.shape[0] for v in workspace.videos]
    n = model.class_count
    rows = np.full((len(counts), n), 1.0 / n)
    with_captions = [i for i, k in enumerate(counts) if k > 0]
    if with_captions:
        for i in with_captions:
            video = workspace.videos[i]
            if video.caption_embeddings.shape[1] != model.dim:
                raise DimensionMismatchError(
                    f"video {video.video_id!r} caption embeddings have dimension "
                    f"{video.caption_embeddings.shape[1]} but the classifier "
                    f"expects {model.dim}")
        stacked = np.concatenate(
            [np.asarray(workspace.videos[i].caption_embeddings, dtype=np.float64)
             for i in with_captions])
        probs = sentences.predict_batch(model, stacked)
        start = 0
        for i in with_captions:
            rows[i] = probs[start:start + counts[i]].mean(axis=0)
            start += counts[i]
    return rows


def _check_mode(mode):
    if mode not in MODES:
        raise InvariantError(f"mode must be one of {MODES}, got {mode!r}")
