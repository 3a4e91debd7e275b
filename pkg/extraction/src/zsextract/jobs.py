"""Extraction jobs: turn videos and vocabularies into workspace files.

Three independent steps, each emitting files in the engine's formats:
per-video object logits (sampled at the job's frame rate), the object
and action vocabularies with their embeddings, and per-video caption
embeddings.  ``run_job`` chains all three and writes the manifest.

Failures are per-item: a video that cannot be decoded is logged and
recorded as skipped, never silently dropped.  Outputs are cached by
path: an existing file is kept (byte-identical by the determinism of
the providers) unless ``overwrite`` is set.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .formats import ExtractionError, unit_rows, write_manifest, write_matrix
from .frames import sample_frames

log = logging.getLogger("zsextract")

CLASS_EMBEDDING_METHOD = "normalized_mean"


@dataclass
class ExtractionJob:
    """Everything one extraction run needs.

    ``videos`` maps video ids to file paths; ``action_sentences`` maps
    action labels to their description sentences; ``video_labels``
    optionally assigns an action label to a video id.
    """

    videos: dict
    object_labels: list
    action_sentences: dict
    out_dir: Path
    frame_rate: float = 1.0
    video_labels: dict = field(default_factory=dict)
    workers: int = 4
    overwrite: bool = False


@dataclass
class VideoResult:
    video_id: str
    path: Optional[str]  # manifest-relative, None when the step failed
    error: Optional[str] = None
    captions: list = field(default_factory=list)


def extract_object_logits(job, recognizer):
    """Write one frames x m logit matrix per video.

    Returns an ordered {video_id: VideoResult}; decode or provider
    failures are logged, recorded on the result and skipped.
    """
    out_dir = Path(job.out_dir) / "videos"
    out_dir.mkdir(parents=True, exist_ok=True)
    m = len(recognizer.labels)

    def one(item):
        video_id, path = item
        rel = f"videos/{video_id}.logits.zsem"
        target = Path(job.out_dir) / rel
        if target.exists() and not job.overwrite:
            return VideoResult(video_id, rel)
        try:
            frames = sample_frames(path, job.frame_rate)
            logits = np.asarray(recognizer.logits(frames))
            if logits.ndim != 2 or logits.shape[0] != frames.shape[0]:
                raise ExtractionError(
                    f"recognizer returned shape {logits.shape} for "
                    f"{frames.shape[0]} frames")
            if logits.shape[1] != m:
                raise ExtractionError(
                    f"recognizer produced {logits.shape[1]} classes but its "
                    f"label list has {m}")
            write_matrix(logits, target)
            return VideoResult(video_id, rel)
        except ExtractionError as exc:
            log.warning("skipping %s: %s", video_id, exc)
            return VideoResult(video_id, None, error=str(exc))

    with ThreadPoolExecutor(max_workers=max(1, job.workers)) as pool:
        results = list(pool.map(one, job.videos.items()))
    return {r.video_id: r for r in results}


def build_vocabularies(job, definition_source, embedder):
    """Embed object definitions and action sentences; write vocab files.

    Unresolved object labels fall back to the label text itself (logged).
    Class embeddings are the unit-normalized mean of each class's
    sentence embeddings.  Returns (definitions, fallback labels).
    """
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    definitions = []
    fallbacks = []
    for label in job.object_labels:
        definition = definition_source.lookup(label)
        if definition is None:
            definition = label
            fallbacks.append(label)
            log.warning("no definition for %r; using the label text", label)
        definitions.append(definition)
    write_matrix(_encode(embedder, definitions),
                 out_dir / "object_definitions.zsem")

    sentence_rows = []
    class_rows = []
    for label in job.action_sentences:
        sentences = list(job.action_sentences[label])
        if not sentences:
            raise ExtractionError(f"action {label!r} has no sentences")
        rows = _encode(embedder, sentences).astype(np.float64)
        sentence_rows.append(rows)
        class_rows.append(unit_rows(rows.mean(axis=0)[None, :])[0])
    write_matrix(np.concatenate(sentence_rows),
                 out_dir / "action_sentence_embeddings.zsem")
    write_matrix(np.stack(class_rows), out_dir / "action_class_embeddings.zsem")
    return definitions, fallbacks


def extract_captions(job, providers, embedder):
    """Write one k x d caption-embedding matrix per video (k = providers
    that produced a sentence).

    A video where every provider stays silent gets no file (k = 0) and a
    warning; the engine falls back to uniform sentence scores for it.
    Caption texts are returned for the manifest audit trail.
    """
    if not providers:
        raise ExtractionError("at least one caption provider is required")
    out_dir = Path(job.out_dir) / "videos"
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(item):
        video_id, path = item
        rel = f"videos/{video_id}.captions.zsem"
        target = Path(job.out_dir) / rel
        try:
            frames = sample_frames(path, job.frame_rate)
        except ExtractionError as exc:
            log.warning("skipping captions for %s: %s", video_id, exc)
            return VideoResult(video_id, None, error=str(exc))
        captions = []
        for provider in providers:
            try:
                text = provider.describe(frames)
            except Exception as exc:  # provider failure is per-video
                log.warning("caption provider %s failed on %s: %s",
                            provider.name, video_id, exc)
                continue
            if text:
                captions.append(text)
        if not captions:
            log.warning("no provider produced a caption for %s", video_id)
            return VideoResult(video_id, None, captions=[])
        if target.exists() and not job.overwrite:
            return VideoResult(video_id, rel, captions=captions)
        write_matrix(_encode(embedder, captions), target)
        return VideoResult(video_id, rel, captions=captions)

    with ThreadPoolExecutor(max_workers=max(1, job.workers)) as pool:
        results = list(pool.map(one, job.videos.items()))
    return {r.video_id: r for r in results}


def run_job(job, recognizer, definition_source, embedder, caption_providers):
    """Run the three extraction steps and write the workspace manifest.

    Videos whose logits cannot be extracted are left out of the manifest
    (their failures are logged and returned).  Returns the manifest path
    and the per-video results.
    """
    job.out_dir = Path(job.out_dir)
    definitions, _ = build_vocabularies(job, definition_source, embedder)
    logit_results = extract_object_logits(job, recognizer)
    caption_results = extract_captions(job, caption_providers, embedder)

    action_labels = list(job.action_sentences)
    label_index = {label: i for i, label in enumerate(action_labels)}
    for video_id, label in job.video_labels.items():
        if label not in label_index:
            raise ExtractionError(
                f"video {video_id!r} is labeled {label!r}, which is not an "
                f"action class")

    videos = []
    skipped = []
    for video_id in job.videos:
        logits = logit_results[video_id]
        if logits.path is None:
            skipped.append(video_id)
            continue
        captions = caption_results[video_id]
        label = job.video_labels.get(video_id)
        videos.append({
            "id": video_id,
            "frame_logits_path": logits.path,
            "caption_embeddings_path": captions.path,
            "label": None if label is None else label_index[label],
            "captions": captions.captions,  # audit trail
        })
    if not videos:
        raise ExtractionError("no video survived extraction")

    manifest = {
        "format_version": 1,
        "dim": embedder.dim,
        "class_embedding_method": CLASS_EMBEDDING_METHOD,
        "objects": {
            "labels": list(job.object_labels),
            "definitions": definitions,
            "embeddings_path": "object_definitions.zsem",
        },
        "actions": {
            "labels": action_labels,
            "sentences": [list(job.action_sentences[l]) for l in action_labels],
            "class_embeddings_path": "action_class_embeddings.zsem",
            "sentence_embeddings_path": "action_sentence_embeddings.zsem",
            "sentence_class_index": [
                i for i, label in enumerate(action_labels)
                for _ in job.action_sentences[label]
            ],
        },
        "videos": videos,
    }
    manifest_path = job.out_dir / "manifest.json"
    write_manifest(manifest, manifest_path)
    if skipped:
        log.warning("%d video(s) skipped: %s", len(skipped), ", ".join(skipped))
    return manifest_path, logit_results, caption_results


def _encode(embedder, texts):
    rows = np.asarray(embedder.encode(list(texts)))
    if rows.ndim != 2 or rows.shape[0] != len(texts):
        raise ExtractionError(
            f"embedder returned shape {rows.shape} for {len(texts)} texts")
    if rows.shape[1] != embedder.dim:
        raise ExtractionError(
            f"embedder dimension drift: declared {embedder.dim}, "
            f"got {rows.shape[1]}")
    return rows
