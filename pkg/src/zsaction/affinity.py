"""Object-to-action affinity: cosine similarity of definition and class
embeddings, with optional per-action top-k sparsification.

Embeddings are unit-normalized before the dot product, so every entry is
a cosine in [-1, 1].  Sparsification keeps, for each action column, only
the entries of the k most related objects and zeroes the rest; surviving
entries are not renormalized.
"""

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .errors import DimensionMismatchError, InvariantError
from .store import load_matrix, save_matrix


@dataclass(frozen=True)
class AffinityMatrix:
    """Object x action similarity scores with provenance."""

    values: np.ndarray  # (m, n) float64
    object_labels: list
    action_labels: list
    sparsity_top: Optional[int] = None  # top-k applied per action column, if any

    @property
    def object_count(self):
        return self.values.shape[0]

    @property
    def action_count(self):
        return self.values.shape[1]


def normalize_rows(matrix):
    """Scale each row to unit Euclidean norm.

    Returns (normalized float64 array, indices of all-zero rows).  Zero
    rows cannot be normalized and are passed through unchanged.
    """
    x = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    zero_rows = [int(i) for i in np.flatnonzero(norms.ravel() == 0.0)]
    safe = norms.copy()
    safe[safe == 0.0] = 1.0
    return x / safe, zero_rows


def compute_affinity(object_vocab, action_vocab):
    """Cosine affinity between every object definition and action class.

    Entry (y, z) is the dot product of the unit-normalized definition
    embedding of object y and the unit-normalized class embedding of
    action z, clipped to [-1, 1] to absorb rounding.
    """
    d_obj = object_vocab.definition_embeddings.shape[1]
    d_act = action_vocab.class_embeddings.shape[1]
    if d_obj != d_act:
        raise DimensionMismatchError(
            f"object definition embeddings have dimension {d_obj} but action "
            f"class embeddings have dimension {d_act}")
    obj_unit, obj_zero = normalize_rows(object_vocab.definition_embeddings)
    act_unit, act_zero = normalize_rows(action_vocab.class_embeddings)
    for idx in obj_zero:
        warnings.warn(f"object {object_vocab.labels[idx]!r} has an all-zero "
                      f"definition embedding; its affinities are zero", stacklevel=2)
    for idx in act_zero:
        warnings.warn(f"action {action_vocab.labels[idx]!r} has an all-zero "
                      f"class embedding; its affinities are zero", stacklevel=2)
    values = np.clip(obj_unit @ act_unit.T, -1.0, 1.0)
    return AffinityMatrix(values, list(object_vocab.labels),
                          list(action_vocab.labels))


def sparsify_affinity(affinity, top):
    """Keep only the ``top`` largest entries of each action column.

    Ties are broken toward the lower object index.  Reapplying the same
    ``top`` is a no-op (the applied value is recorded on the matrix).
    """
    m = affinity.object_count
    if not 1 <= top <= m:
        raise InvariantError(
            f"top_affinity must be in [1, {m}] (object count), got {top}")
    if affinity.sparsity_top == top:
        return affinity
    sparse_cols = kernels.keep_top_k_rows(
        np.ascontiguousarray(affinity.values.T), top).T
    return replace(affinity, values=np.ascontiguousarray(sparse_cols),
                   sparsity_top=top)


def restrict_affinity(affinity, action_indices):
    """Column-restrict the affinity to a subset of action classes.

    Per-column sparsification commutes with column selection, so a
    restricted matrix keeps its ``sparsity_top`` provenance.
    """
    idx = list(action_indices)
    return AffinityMatrix(
        np.ascontiguousarray(affinity.values[:, idx]),
        affinity.object_labels,
        [affinity.action_labels[i] for i in idx],
        affinity.sparsity_top)


def save_affinity(affinity, path, extra_meta=None):
    """Write the affinity as a matrix file plus a JSON metadata sidecar."""
    path = Path(path)
    save_matrix(affinity.values, path)
    meta = {
        "kind": "affinity",
        "normalized": True,
        "sparsity_top": affinity.sparsity_top,
        "object_labels": affinity.object_labels,
        "action_labels": affinity.action_labels,
    }
    if extra_meta:
        meta.update(extra_meta)
    sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_affinity(path):
    """Read a matrix file (and its sidecar, when present) as an affinity."""
    path = Path(path)
    values = np.asarray(load_matrix(path), dtype=np.float64)
    meta_path = sidecar(path)
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        object_labels = meta.get("object_labels") or [str(i) for i in range(values.shape[0])]
        action_labels = meta.get("action_labels") or [str(i) for i in range(values.shape[1])]
        top = meta.get("sparsity_top")
    else:
        object_labels = [str(i) for i in range(values.shape[0])]
        action_labels = [str(i) for i in range(values.shape[1])]
        top = None
    return AffinityMatrix(values, object_labels, action_labels, top)


def sidecar(path):
    """Path of the JSON metadata file accompanying a data file."""
    path = Path(path)
    return path.with_name(path.name + ".meta.json")
