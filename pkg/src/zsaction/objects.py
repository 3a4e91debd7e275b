"""Object pathway: per-video object probabilities and their action scores.

A video's frame logits are averaged over frames and pushed through one
softmax, giving a probability vector over object classes.  That vector,
optionally sparsified to its top entries, scores actions through the
affinity matrix.
"""

import numpy as np

from . import kernels
from .errors import DimensionMismatchError, InvariantError


def aggregate_video(frame_logits):
    """Mean of the frame logit rows followed by a stable softmax."""
    logits = np.asarray(frame_logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[0] < 1:
        raise InvariantError(
            f"frame logits must be a non-empty 2D array, got shape {logits.shape}")
    if not np.isfinite(logits).all():
        raise InvariantError("frame logits contain non-finite values")
    return kernels.softmax(logits.mean(axis=0))


def aggregate_videos(videos):
    """Stack aggregate_video over records into a (videos, m) matrix."""
    means = []
    for video in videos:
        logits = np.asarray(video.frame_logits, dtype=np.float64)
        if logits.ndim != 2 or logits.shape[0] < 1:
            raise InvariantError(
                f"video {video.video_id!r}: frame logits must be a non-empty "
                f"2D array, got shape {logits.shape}")
        mean = logits.mean(axis=0)
        if not np.isfinite(mean).all():
            raise InvariantError(
                f"video {video.video_id!r}: frame logits contain non-finite values")
        means.append(mean)
    return kernels.softmax_rows(np.stack(means))


def sparsify_objects(probs, top):
    """Keep the ``top`` largest object probabilities, zero the rest.

    Ties break toward the lower index; survivors are not renormalized.
    """
    p = np.asarray(probs, dtype=np.float64)
    m = p.shape[-1]
    if not 1 <= top <= m:
        raise InvariantError(f"top_objects must be in [1, {m}], got {top}")
    if p.ndim == 1:
        return kernels.keep_top_k(p, top)
    return kernels.keep_top_k_rows(p, top)


def object_action_scores(probs, affinity):
    """Score every action as the probability-weighted sum of affinities."""
    p = np.asarray(probs, dtype=np.float64)
    if p.shape[-1] != affinity.object_count:
        raise DimensionMismatchError(
            f"object probabilities have length {p.shape[-1]} but the affinity "
            f"matrix has {affinity.object_count} object rows")
    return p @ affinity.values
