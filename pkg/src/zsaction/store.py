"""Workspace data model and on-disk formats.

A workspace bundles everything the engine consumes:

* an object vocabulary: labels, one definition sentence per label, and
  the definition-sentence embeddings (m x d);
* an action vocabulary: labels, per-class description sentences, one
  representative embedding per class (n x d), and the per-sentence
  embeddings with their class indices (the soft-labeled training set);
* video records: per-frame object logits (frames x m) and caption
  embeddings (k x d, k >= 0), plus an optional true action label.

Matrix file format, version 1: magic ``ZSEM``, version byte 0x01, rows
and cols as unsigned 32-bit little-endian, then rows*cols float32
little-endian values in row-major order.  The header is exactly 13
bytes.  Values are stored at float32 precision; all arithmetic
downstream is performed in float64 after load.

The manifest is a JSON document tying the matrix files together (paths
are resolved relative to the manifest's directory):

.. code-block:: json

    {
      "format_version": 1,
      "dim": 32,
      "class_embedding_method": "normalized_mean",
      "objects": {"labels": [...], "definitions": [...],
                  "embeddings_path": "..."},
      "actions": {"labels": [...], "sentences": [[...], ...],
                  "class_embeddings_path": "...",
                  "sentence_embeddings_path": "...",
                  "sentence_class_index": [...]},
      "videos": [{"id": "...", "frame_logits_path": "...",
                  "caption_embeddings_path": "..." , "label": 0}]
    }

``caption_embeddings_path`` may be null for a video without captions
(k = 0); ``label`` may be null.  Unknown manifest keys are ignored so
producers can attach audit metadata.

All loaded arrays are marked read-only; loaded objects are safe to share
across worker threads.
"""

import json
import os
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, InvariantError, ManifestError, MatrixFormatError

MAGIC = b"ZSEM"
FORMAT_VERSION = 1
HEADER_SIZE = 13
_HEADER = struct.Struct("<4sBII")


@dataclass(frozen=True)
class ObjectVocabulary:
    """Object classes with one definition sentence and embedding each."""

    labels: list
    definitions: list
    definition_embeddings: np.ndarray  # (m, d) float32

    @property
    def size(self):
        return len(self.labels)


@dataclass(frozen=True)
class ActionVocabulary:
    """Action classes with description sentences and their embeddings.

    ``class_embeddings`` holds one representative vector per class;
    ``sentence_embeddings`` holds every description sentence's vector
    with ``sentence_class_index`` assigning each row to its class (the
    soft-labeled training set for the sentence classifier).
    """

    labels: list
    sentences: list  # list of lists of description sentences, one per class
    class_embeddings: np.ndarray  # (n, d) float32
    sentence_embeddings: np.ndarray  # (total sentences, d) float32
    sentence_class_index: np.ndarray  # (total sentences,) int64

    @property
    def size(self):
        return len(self.labels)


@dataclass(frozen=True)
class VideoRecord:
    """Per-video inputs: frame logits, caption embeddings, optional label."""

    video_id: str
    frame_logits: np.ndarray  # (frames, m) float32
    caption_embeddings: np.ndarray  # (k, d) float32, k >= 0
    true_label: Optional[int] = None


@dataclass(frozen=True)
class Workspace:
    """A validated, immutable bundle of vocabularies and video records."""

    object_vocab: ObjectVocabulary
    action_vocab: ActionVocabulary
    videos: list
    dim: int
    format_version: int = FORMAT_VERSION
    class_embedding_method: str = "normalized_mean"

    @property
    def object_count(self):
        return self.object_vocab.size

    @property
    def action_count(self):
        return self.action_vocab.size


def load_matrix(path):
    """Read a matrix file, validating header, payload length and finiteness.

    Returns a read-only float32 array of shape (rows, cols).
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < HEADER_SIZE:
        raise MatrixFormatError(
            f"truncated header: {len(data)} bytes, need {HEADER_SIZE}",
            path=path, offset=len(data))
    magic, version, rows, cols = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise MatrixFormatError(
            f"bad magic {magic!r} at offset 0, expected {MAGIC!r}",
            path=path, offset=0)
    if version != FORMAT_VERSION:
        raise MatrixFormatError(
            f"unsupported version {version} at offset 4", path=path, offset=4)
    if rows < 1 or cols < 1:
        raise MatrixFormatError(
            f"invalid shape {rows}x{cols} at offset 5: dimensions must be >= 1",
            path=path, offset=5)
    expected = rows * cols * 4
    found = len(data) - HEADER_SIZE
    if found < expected:
        raise MatrixFormatError(
            f"truncated payload at offset {len(data)}: "
            f"expected {expected} payload bytes, found {found}",
            path=path, offset=len(data))
    if found > expected:
        raise MatrixFormatError(
            f"trailing data at offset {HEADER_SIZE + expected}: "
            f"expected {expected} payload bytes, found {found}",
            path=path, offset=HEADER_SIZE + expected)
    values = np.frombuffer(data, dtype="<f4", count=rows * cols,
                           offset=HEADER_SIZE).reshape(rows, cols).copy()
    finite = np.isfinite(values)
    if not finite.all():
        index = int(np.argmin(finite.ravel()))
        offset = HEADER_SIZE + 4 * index
        raise MatrixFormatError(
            f"non-finite value {values.ravel()[index]!r} at offset {offset} "
            f"(row {index // cols}, col {index % cols})",
            path=path, offset=offset)
    values.flags.writeable = False
    return values


def save_matrix(matrix, path):
    """Write a matrix file readable by :func:`load_matrix`.

    Input is cast to float32 (the storage precision); float32 input
    round-trips bit-exactly.  The write is atomic (temp file + rename).
    """
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise InvariantError(f"matrix must be 2-dimensional, got shape {arr.shape}")
    rows, cols = arr.shape
    if rows < 1 or cols < 1:
        raise InvariantError(f"matrix dimensions must be >= 1, got {rows}x{cols}")
    if rows >= 2 ** 32 or cols >= 2 ** 32:
        raise InvariantError(f"matrix dimensions exceed the format limit: {rows}x{cols}")
    values = np.ascontiguousarray(arr, dtype="<f4")
    if not np.isfinite(values).all():
        raise InvariantError("matrix contains non-finite values after float32 cast")
    path = Path(path)
    payload = _HEADER.pack(MAGIC, FORMAT_VERSION, rows, cols) + values.tobytes()
    _atomic_write(path, payload)


def _atomic_write(path, payload):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def _require(condition, message):
    if not condition:
        raise ManifestError(message)


def _as_matrix(path, what):
    try:
        return load_matrix(path)
    except FileNotFoundError:
        raise ManifestError(f"{what}: file not found: {path}") from None


def _check_dim(name, got, expected):
    if got != expected:
        raise DimensionMismatchError(
            f"{name} has embedding dimension {got} but the manifest declares {expected}")


def load_workspace(manifest_path):
    """Load and cross-validate a workspace from its manifest.

    Raises :class:`ManifestError` for schema problems (naming the label,
    video or field at fault) and :class:`DimensionMismatchError` when two
    files disagree on a dimension (naming both values).  Emits a
    ``UserWarning`` for degenerate-but-legal content such as a video with
    no captions.
    """
    manifest_path = Path(manifest_path)
    try:
        raw = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: not valid JSON: {exc}") from None
    base = manifest_path.parent

    _require(isinstance(raw, dict), "manifest root must be a JSON object")
    for key in ("format_version", "dim", "objects", "actions", "videos"):
        _require(key in raw, f"manifest is missing required field {key!r}")
    _require(raw["format_version"] == FORMAT_VERSION,
             f"unsupported manifest format_version {raw['format_version']!r}")
    dim = raw["dim"]
    _require(isinstance(dim, int) and dim >= 1, f"dim must be a positive integer, got {dim!r}")

    obj = raw["objects"]
    for key in ("labels", "definitions", "embeddings_path"):
        _require(key in obj, f"objects section is missing {key!r}")
    labels = obj["labels"]
    definitions = obj["definitions"]
    _require(len(labels) >= 1, "objects.labels must be non-empty")
    _require(len(set(labels)) == len(labels),
             f"duplicate object label: {_first_duplicate(labels)!r}")
    if len(definitions) < len(labels):
        raise ManifestError(
            f"object {labels[len(definitions)]!r} has no definition entry")
    if len(definitions) > len(labels):
        raise ManifestError(
            f"{len(definitions) - len(labels)} definition entries beyond the "
            f"{len(labels)} object labels")
    def_emb = _as_matrix(base / obj["embeddings_path"], "objects.embeddings_path")
    if def_emb.shape[0] != len(labels):
        raise DimensionMismatchError(
            f"object embeddings have {def_emb.shape[0]} rows but there are "
            f"{len(labels)} object labels")
    _check_dim("object definition embeddings", def_emb.shape[1], dim)
    object_vocab = ObjectVocabulary(list(labels), list(definitions), def_emb)

    act = raw["actions"]
    for key in ("labels", "sentences", "class_embeddings_path",
                "sentence_embeddings_path", "sentence_class_index"):
        _require(key in act, f"actions section is missing {key!r}")
    action_labels = act["labels"]
    sentences = act["sentences"]
    _require(len(action_labels) >= 1, "actions.labels must be non-empty")
    _require(len(set(action_labels)) == len(action_labels),
             f"duplicate action label: {_first_duplicate(action_labels)!r}")
    if len(sentences) != len(action_labels):
        raise ManifestError(
            f"actions.sentences has {len(sentences)} entries for "
            f"{len(action_labels)} labels")
    for label, sents in zip(action_labels, sentences):
        _require(len(sents) >= 1, f"action {label!r} has no description sentences")
    class_emb = _as_matrix(base / act["class_embeddings_path"], "actions.class_embeddings_path")
    if class_emb.shape[0] != len(action_labels):
        raise DimensionMismatchError(
            f"class embeddings have {class_emb.shape[0]} rows but there are "
            f"{len(action_labels)} action labels")
    _check_dim("action class embeddings", class_emb.shape[1], dim)
    sent_emb = _as_matrix(base / act["sentence_embeddings_path"],
                          "actions.sentence_embeddings_path")
    _check_dim("action sentence embeddings", sent_emb.shape[1], dim)
    class_index = np.asarray(act["sentence_class_index"], dtype=np.int64)
    if class_index.ndim != 1 or class_index.shape[0] != sent_emb.shape[0]:
        raise ManifestError(
            f"sentence_class_index has {class_index.size} entries for "
            f"{sent_emb.shape[0]} sentence embedding rows")
    n_actions = len(action_labels)
    bad = (class_index < 0) | (class_index >= n_actions)
    if bad.any():
        pos = int(np.argmax(bad))
        raise ManifestError(
            f"sentence_class_index[{pos}] = {class_index[pos]} is outside "
            f"[0, {n_actions})")
    counts = np.bincount(class_index, minlength=n_actions)
    for cls, (label, sents) in enumerate(zip(action_labels, sentences)):
        if counts[cls] != len(sents):
            raise ManifestError(
                f"action {label!r} lists {len(sents)} sentences but has "
                f"{counts[cls]} embedded sentence rows")
    total = sum(len(s) for s in sentences)
    if total != sent_emb.shape[0]:
        raise ManifestError(
            f"{total} description sentences listed but sentence embeddings "
            f"have {sent_emb.shape[0]} rows")
    class_index.flags.writeable = False
    action_vocab = ActionVocabulary(list(action_labels),
                                    [list(s) for s in sentences],
                                    class_emb, sent_emb, class_index)

    videos = []
    m = object_vocab.size
    for i, entry in enumerate(raw["videos"]):
        for key in ("id", "frame_logits_path"):
            _require(key in entry, f"videos[{i}] is missing {key!r}")
        vid = entry["id"]
        logits = _as_matrix(base / entry["frame_logits_path"],
                            f"videos[{i}] ({vid!r}) frame_logits_path")
        if logits.shape[1] != m:
            raise DimensionMismatchError(
                f"video {vid!r} frame logits have {logits.shape[1]} columns but "
                f"the object vocabulary has {m} classes")
        cap_path = entry.get("caption_embeddings_path")
        if cap_path is None:
            captions = np.zeros((0, dim), dtype=np.float32)
            captions.flags.writeable = False
            warnings.warn(f"video {vid!r} has no caption embeddings; "
                          f"sentence scores fall back to uniform", stacklevel=2)
        else:
            captions = _as_matrix(base / cap_path,
                                  f"videos[{i}] ({vid!r}) caption_embeddings_path")
            _check_dim(f"video {vid!r} caption embeddings", captions.shape[1], dim)
        label = entry.get("label")
        if label is not None:
            _require(isinstance(label, int) and 0 <= label < n_actions,
                     f"video {vid!r} label {label!r} is outside [0, {n_actions})")
        videos.append(VideoRecord(vid, logits, captions, label))

    return Workspace(object_vocab, action_vocab, videos, dim,
                     raw["format_version"],
                     raw.get("class_embedding_method", "normalized_mean"))


def save_workspace(workspace, out_dir):
    """Write a workspace to a directory; returns the manifest path.

    File contents are a pure function of the workspace (no timestamps),
    so identical workspaces serialize byte-identically.
    """
    out_dir = Path(out_dir)
    (out_dir / "videos").mkdir(parents=True, exist_ok=True)
    save_matrix(workspace.object_vocab.definition_embeddings,
                out_dir / "object_definitions.zsem")
    save_matrix(workspace.action_vocab.class_embeddings,
                out_dir / "action_class_embeddings.zsem")
    save_matrix(workspace.action_vocab.sentence_embeddings,
                out_dir / "action_sentence_embeddings.zsem")
    entries = []
    for i, video in enumerate(workspace.videos):
        logits_rel = f"videos/v{i:05d}.logits.zsem"
        save_matrix(video.frame_logits, out_dir / logits_rel)
        if video.caption_embeddings.shape[0] > 0:
            captions_rel = f"videos/v{i:05d}.captions.zsem"
            save_matrix(video.caption_embeddings, out_dir / captions_rel)
        else:
            captions_rel = None
        entries.append({
            "id": video.video_id,
            "frame_logits_path": logits_rel,
            "caption_embeddings_path": captions_rel,
            "label": video.true_label,
        })
    manifest = {
        "format_version": workspace.format_version,
        "dim": workspace.dim,
        "class_embedding_method": workspace.class_embedding_method,
        "objects": {
            "labels": workspace.object_vocab.labels,
            "definitions": workspace.object_vocab.definitions,
            "embeddings_path": "object_definitions.zsem",
        },
        "actions": {
            "labels": workspace.action_vocab.labels,
            "sentences": workspace.action_vocab.sentences,
            "class_embeddings_path": "action_class_embeddings.zsem",
            "sentence_embeddings_path": "action_sentence_embeddings.zsem",
            "sentence_class_index": [int(c) for c in workspace.action_vocab.sentence_class_index],
        },
        "videos": entries,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _first_duplicate(items):
    seen = set()
    for item in items:
        if item in seen:
            return item
        seen.add(item)
    return None
